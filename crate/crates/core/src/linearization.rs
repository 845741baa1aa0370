//! Matrix-free linearization of a right-hand side.
//!
//! The Jacobian is only ever applied, by forward differences of f around a frozen base
//! point. Its spectral radius is estimated by power iteration on the same action and
//! cached for a fixed number of steps.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::{norm2, LinearOperator};

/// A semi-discrete right-hand side u ↦ f(u).
pub trait Rhs: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, u: &[f64], out: &mut [f64]);
}

impl<R: Rhs + ?Sized> Rhs for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        (**self).eval(u, out)
    }
}

/// Right-hand side paired with an evaluation counter.
pub struct RhsOperator<R> {
    rhs: R,
    calls: AtomicUsize,
}

impl<R: Rhs> RhsOperator<R> {
    pub fn new(rhs: R) -> Self {
        Self {
            rhs,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.rhs.dim()
    }

    pub fn eval(&self, u: &[f64], out: &mut [f64]) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.rhs.eval(u, out);
    }

    pub fn eval_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.eval(u, &mut out);
        out
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &R {
        &self.rhs
    }
}

/// Closure-backed right-hand side, mostly for tests and small ODEs.
pub struct FnRhs<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> Rhs for FnRhs<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        (self.f)(u, out)
    }
}

/// The Jacobian of f at a fixed point uⁿ, available only through its action.
pub struct FrozenLinearization<'a, R> {
    op: &'a RhsOperator<R>,
    base_state: Vec<f64>,
    base_rhs: Vec<f64>,
    base_norm: f64,
}

impl<'a, R: Rhs> FrozenLinearization<'a, R> {
    /// Freezes at `u`; costs one rhs evaluation.
    pub fn new(op: &'a RhsOperator<R>, u: &[f64]) -> Self {
        let base_rhs = op.eval_vec(u);
        Self::with_rhs(op, u.to_vec(), base_rhs)
    }

    /// Freezes at `u` with a known f(u).
    pub fn with_rhs(op: &'a RhsOperator<R>, base_state: Vec<f64>, base_rhs: Vec<f64>) -> Self {
        let base_norm = norm2(&base_state);
        Self {
            op,
            base_state,
            base_rhs,
            base_norm,
        }
    }

    pub fn operator(&self) -> &'a RhsOperator<R> {
        self.op
    }

    pub fn base_state(&self) -> &[f64] {
        &self.base_state
    }

    pub fn base_rhs(&self) -> &[f64] {
        &self.base_rhs
    }

    /// J·w ≈ (f(uⁿ + ε·w) − f(uⁿ))/ε with ε = √eps·max(1, ‖uⁿ‖)/‖w‖.
    pub fn jvp_into(&self, w: &[f64], out: &mut [f64]) {
        let wn = norm2(w);
        if wn == 0.0 {
            out.fill(0.0);
            return;
        }
        let eps = f64::EPSILON.sqrt() * self.base_norm.max(1.0) / wn.max(1e-300);
        let shifted: Vec<f64> = self.base_state.iter().zip(w).map(|(u, w)| u + eps * w).collect();
        self.op.eval(&shifted, out);
        for (o, f0) in out.iter_mut().zip(&self.base_rhs) {
            *o = (*o - f0) / eps;
        }
    }

    pub fn jvp(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.jvp_into(w, &mut out);
        out
    }

    /// Nonlinear remainder 𝓕(w) = f(w) − J(uⁿ)·w, given a fresh f(w).
    pub fn remainder(&self, w: &[f64], f_w: &[f64]) -> Vec<f64> {
        let jw = self.jvp(w);
        f_w.iter().zip(&jw).map(|(f, j)| f - j).collect()
    }

    /// 𝓕(w) − 𝓕(uⁿ) = f(w) − f(uⁿ) − J·(w − uⁿ).
    ///
    /// Applying J to the difference keeps the finite-difference error proportional to
    /// ‖w − uⁿ‖ instead of ‖w‖, which is what the stage combinations need.
    pub fn remainder_difference(&self, w: &[f64], f_w: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = w.iter().zip(&self.base_state).map(|(a, b)| a - b).collect();
        let jd = self.jvp(&diff);
        f_w.iter()
            .zip(&self.base_rhs)
            .zip(&jd)
            .map(|((f, f0), j)| f - f0 - j)
            .collect()
    }
}

impl<R: Rhs> LinearOperator for FrozenLinearization<'_, R> {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.jvp_into(x, out)
    }
}

/// How often and how conservatively the spectral radius is refreshed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPolicy {
    pub interval: usize,
    pub safety: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for SpectralPolicy {
    fn default() -> Self {
        Self {
            interval: 50,
            safety: 1.25,
            seed: 0,
            max_iterations: 100,
            rel_tol: 0.02,
        }
    }
}

/// Cached magnitude of the dominant Jacobian eigenvalue (already safety-scaled).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub alpha: f64,
    pub age_steps: usize,
    pub interval: usize,
    pub safety: f64,
    /// Power-iteration vector kept for warm starts.
    pub dominant: Option<Vec<f64>>,
    /// Rhs evaluations spent by the computation that produced this estimate
    /// (zero when it was merely aged).
    pub rhs_calls: usize,
}

impl SpectralEstimate {
    pub fn fixed(alpha: f64) -> Self {
        Self {
            alpha,
            age_steps: 0,
            interval: usize::MAX,
            safety: 1.0,
            dominant: None,
            rhs_calls: 0,
        }
    }
}

/// Returns `prev` aged by one step while it is younger than the interval, otherwise
/// recomputes it by power iteration on w ↦ J·w.
///
/// The magnitude estimate is the geometric mean of two consecutive ‖J·w‖ for unit w,
/// i.e. the square root of a power-iteration step on J². It equals the Rayleigh-quotient
/// magnitude for a real dominant eigenvector and also settles for a dominant ±λ or
/// conjugate pair, as produced by centered advection stencils, where ‖J·w‖ alone keeps
/// alternating between two values.
pub fn estimate_alpha<R: Rhs>(
    lin: &FrozenLinearization<'_, R>,
    prev: Option<&SpectralEstimate>,
    policy: &SpectralPolicy,
    step_index: u64,
) -> SpectralEstimate {
    if let Some(p) = prev {
        if p.age_steps + 1 < policy.interval {
            return SpectralEstimate {
                age_steps: p.age_steps + 1,
                rhs_calls: 0,
                ..p.clone()
            };
        }
    }
    let calls_before = lin.operator().calls();
    let n = lin.base_state().len();
    let mut w = match prev.and_then(|p| p.dominant.clone()) {
        Some(d) if d.len() == n && norm2(&d) > 0.0 => d,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ step_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let wn = norm2(&w);
    w.iter_mut().for_each(|x| *x /= wn);

    let mut z = vec![0.0; n];
    let mut estimate = 0.0;
    let mut last_norm = 0.0;
    let mut alpha = 0.0;
    let mut dominant = None;
    for it in 0..policy.max_iterations {
        lin.jvp_into(&w, &mut z);
        let zn = norm2(&z);
        if !(zn > 1e-300) || !zn.is_finite() {
            estimate = 0.0;
            break;
        }
        let next = if it == 0 { zn } else { (zn * last_norm).sqrt() };
        let converged = it > 1 && (next - estimate).abs() < policy.rel_tol * next;
        estimate = next;
        last_norm = zn;
        for (wi, zi) in w.iter_mut().zip(&z) {
            *wi = zi / zn;
        }
        dominant = Some(w.clone());
        alpha = policy.safety * estimate;
        if converged {
            break;
        }
    }
    if estimate == 0.0 {
        alpha = 0.0;
    }
    SpectralEstimate {
        alpha,
        age_steps: 0,
        interval: policy.interval,
        safety: policy.safety,
        dominant,
        rhs_calls: lin.operator().calls() - calls_before,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(a: [[f64; 2]; 2]) -> FnRhs<impl Fn(&[f64], &mut [f64]) + Sync> {
        FnRhs {
            dim: 2,
            f: move |u: &[f64], out: &mut [f64]| {
                out[0] = a[0][0] * u[0] + a[0][1] * u[1];
                out[1] = a[1][0] * u[0] + a[1][1] * u[1];
            },
        }
    }

    fn quadratic() -> FnRhs<impl Fn(&[f64], &mut [f64]) + Sync> {
        FnRhs {
            dim: 3,
            f: |u: &[f64], out: &mut [f64]| {
                for (o, x) in out.iter_mut().zip(u) {
                    *o = x * x;
                }
            },
        }
    }

    #[test]
    fn counter_increments_per_eval() {
        let op = RhsOperator::new(quadratic());
        let _ = op.eval_vec(&[1.0, 2.0, 3.0]);
        let _ = op.eval_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(op.calls(), 2);
    }

    #[test]
    fn jvp_examples() {
        let op = RhsOperator::new(linear([[0.0, 1.0], [-1.0, 0.0]]));
        let lin = FrozenLinearization::new(&op, &[0.3, -0.2]);
        assert_eq!(lin.jvp(&[0.0, 0.0]), vec![0.0, 0.0]);
        let before = op.calls();
        let jw = lin.jvp(&[1.0, 0.0]);
        assert_eq!(op.calls() - before, 1);
        assert!((jw[0] - 0.0).abs() < 1e-7 && (jw[1] + 1.0).abs() < 1e-7);

        let op = RhsOperator::new(quadratic());
        let lin = FrozenLinearization::new(&op, &[1.0, 2.0, 3.0]);
        let jw = lin.jvp(&[1.0, 1.0, 1.0]);
        for (got, want) in jw.iter().zip([2.0, 4.0, 6.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn remainder_examples() {
        let op = RhsOperator::new(linear([[-2.0, 1.0], [0.5, -3.0]]));
        let lin = FrozenLinearization::new(&op, &[1.0, 1.0]);
        let w = [0.4, -1.3];
        let fw = op.eval_vec(&w);
        assert!(norm2(&lin.remainder(&w, &fw)) < 1e-6);
        assert!(norm2(&lin.remainder_difference(&w, &fw)) < 1e-6);

        // 𝓕(uⁿ) for f(u) = u⊙u against an assembled Jacobian.
        let u = [1.0, 2.0, 3.0];
        let op = RhsOperator::new(quadratic());
        let lin = FrozenLinearization::new(&op, &u);
        let mut jac = [[0.0; 3]; 3];
        for c in 0..3 {
            let mut e = [0.0; 3];
            e[c] = 1.0;
            let col = lin.jvp(&e);
            for r in 0..3 {
                jac[r][c] = col[r];
            }
        }
        let ju: Vec<f64> = (0..3).map(|r| (0..3).map(|c| jac[r][c] * u[c]).sum()).collect();
        let fu = op.eval_vec(&u);
        let rem = lin.remainder(&u, &fu);
        for r in 0..3 {
            assert!((rem[r] - (fu[r] - ju[r])).abs() < 1e-6);
            assert!((rem[r] + u[r] * u[r]).abs() < 1e-6);
        }
    }

    #[test]
    fn forward_matches_central_difference() {
        let u = [0.7, -1.1, 2.3];
        let w = [0.2, 0.5, -0.9];
        let op = RhsOperator::new(quadratic());
        let lin = FrozenLinearization::new(&op, &u);
        let fwd = lin.jvp(&w);
        let h = 1e-5;
        let plus: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - h * b).collect();
        let fp = op.eval_vec(&plus);
        let fm = op.eval_vec(&minus);
        for i in 0..3 {
            let central = (fp[i] - fm[i]) / (2.0 * h);
            assert!((fwd[i] - central).abs() <= 1e-4 * central.abs());
        }
    }

    #[test]
    fn power_iteration_diagonal() {
        let op = RhsOperator::new(linear([[-4.0, 0.0], [0.0, -1.0]]));
        let lin = FrozenLinearization::new(&op, &[1.0, 1.0]);
        let est = estimate_alpha(&lin, None, &SpectralPolicy::default(), 0);
        assert!((est.alpha - 5.0).abs() <= 0.02 * 5.0, "{}", est.alpha);
        assert_eq!(est.age_steps, 0);
        assert!(est.rhs_calls > 0);
    }

    #[test]
    fn power_iteration_identity() {
        let op = RhsOperator::new(linear([[1.0, 0.0], [0.0, 1.0]]));
        let lin = FrozenLinearization::new(&op, &[0.0, 0.0]);
        let policy = SpectralPolicy {
            safety: 1.0,
            ..Default::default()
        };
        let est = estimate_alpha(&lin, None, &policy, 0);
        assert!((est.alpha - 1.0).abs() <= 0.02);
    }

    #[test]
    fn zero_operator_gives_zero_alpha() {
        let op = RhsOperator::new(linear([[0.0, 0.0], [0.0, 0.0]]));
        let lin = FrozenLinearization::new(&op, &[1.0, 1.0]);
        let est = estimate_alpha(&lin, None, &SpectralPolicy::default(), 0);
        assert_eq!(est.alpha, 0.0);
    }

    #[test]
    fn cache_ages_without_rhs_calls() {
        let op = RhsOperator::new(linear([[-4.0, 0.0], [0.0, -1.0]]));
        let lin = FrozenLinearization::new(&op, &[1.0, 1.0]);
        let prev = SpectralEstimate {
            alpha: 3.0,
            age_steps: 10,
            interval: 50,
            safety: 1.25,
            dominant: None,
            rhs_calls: 7,
        };
        let before = op.calls();
        let est = estimate_alpha(&lin, Some(&prev), &SpectralPolicy::default(), 11);
        assert_eq!(op.calls(), before);
        assert_eq!(est.alpha, 3.0);
        assert_eq!(est.age_steps, 11);
        assert_eq!(est.rhs_calls, 0);

        let old = SpectralEstimate { age_steps: 49, ..prev };
        let est = estimate_alpha(&lin, Some(&old), &SpectralPolicy::default(), 50);
        assert_eq!(est.age_steps, 0);
        assert!((est.alpha - 5.0).abs() < 0.1);
    }
}
