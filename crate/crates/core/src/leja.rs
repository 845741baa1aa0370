//! Polynomial interpolation of φₗ(J·dt)·v at real Leja points.
//!
//! The Leja sequence lives on [−2, 2]. The operator is shifted and scaled so its spectrum,
//! assumed to lie in [−α, 0], maps onto that interval; the Newton form of the interpolant
//! is then accumulated one operator application per term.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::operator::{axpy, norm2, LinearOperator};
use crate::phi::PhiOrder;

/// Length of the precomputed sequence and the hard cap on interpolation terms.
pub const MAX_LEJA_POINTS: usize = 500;
/// Uniform candidate grid used for the argmax.
pub const CANDIDATE_GRID: usize = 10_001;
/// Spectral magnitudes below this are treated as a zero operator.
pub const DEGENERATE_ALPHA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LejaSequence {
    pub points: Vec<f64>,
}

impl LejaSequence {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Greedy Leja points on [−2, 2] starting from z₀ = 2.
///
/// Each new point maximizes ∏ |z − zⱼ| over a uniform grid of 10 001 candidates; the
/// product is tracked as a running sum of logarithms. Ties go to the larger candidate.
pub fn generate_leja(count: usize) -> Result<LejaSequence> {
    if !(1..=MAX_LEJA_POINTS).contains(&count) {
        return Err(Error::LejaCount(count));
    }
    let grid: Vec<f64> = (0..CANDIDATE_GRID)
        .map(|k| -2.0 + 4.0 * k as f64 / (CANDIDATE_GRID - 1) as f64)
        .collect();
    let mut log_prod = vec![0.0f64; CANDIDATE_GRID];
    let mut points = Vec::with_capacity(count);
    let mut next = 2.0;
    for _ in 0..count {
        points.push(next);
        for (lp, &z) in log_prod.iter_mut().zip(&grid) {
            *lp += (z - next).abs().ln();
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_z = 0.0;
        for (&lp, &z) in log_prod.iter().zip(&grid) {
            if !lp.is_finite() {
                continue;
            }
            let tie = best.is_finite() && (lp - best).abs() <= 1e-12 * best.abs().max(1.0);
            if (lp > best && !tie) || (tie && z > best_z) {
                best = lp;
                best_z = z;
            }
        }
        next = best_z;
    }
    Ok(LejaSequence { points })
}

/// The full 500-point sequence, computed once per process.
pub fn leja_points() -> &'static LejaSequence {
    static POINTS: OnceLock<LejaSequence> = OnceLock::new();
    POINTS.get_or_init(|| generate_leja(MAX_LEJA_POINTS).expect("valid count"))
}

/// Affine map from the spectral interval [−α, 0] onto [−2, 2]: z = q + θ·ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftScale {
    pub q: f64,
    pub theta: f64,
}

impl ShiftScale {
    pub fn alpha(&self) -> f64 {
        4.0 * self.theta
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.q - 2.0 * self.theta, self.q + 2.0 * self.theta)
    }

    /// Shift for a zero operator; [`apply_phi_leja`] short-circuits on it.
    pub fn degenerate() -> Self {
        Self { q: 0.0, theta: 0.0 }
    }
}

pub fn shift_and_scale(alpha: f64) -> Result<ShiftScale> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(ShiftScale {
        q: -alpha / 2.0,
        theta: alpha / 4.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiApplyResult {
    pub vector: Vec<f64>,
    /// Operator applications consumed.
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the last accepted increment.
    pub residual: f64,
}

/// Newton coefficients of ξ ↦ φₗ(c + h·ξ) at `nodes`.
///
/// Computes φₗ(M)·e₁ for the lower-bidiagonal M = c·I + h·Z (Z holds the nodes on its
/// diagonal and ones below), using the (n+l) augmentation and exp(B)·x = (exp(B/s))ˢ·x
/// with a Taylor polynomial per substep. Only bidiagonal matrix-vector products are
/// needed, so the cost is linear in the number of nodes.
pub fn scaled_divided_differences(l: PhiOrder, c: f64, h: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let l = l.get();
    let size = n + l;
    let diag: Vec<f64> = nodes.iter().map(|&x| c + h * x).collect();

    // B·x for B = [[M, e₁, 0], [0, 0, I_{l−1}], [0, 0, 0]].
    let apply = |x: &[f64], out: &mut [f64], scale: f64| {
        for i in 0..n {
            let mut v = diag[i] * x[i];
            if i > 0 {
                v += h * x[i - 1];
            }
            out[i] = v * scale;
        }
        if l > 0 {
            out[0] += x[n] * scale;
            for k in 0..l {
                out[n + k] = if k + 1 < l { x[n + k + 1] * scale } else { 0.0 };
            }
        }
    };

    let norm = diag.iter().map(|d| d.abs()).fold(0.0, f64::max) + h.abs() + if l > 0 { 1.0 } else { 0.0 };
    let substeps = norm.ceil().max(1.0) as usize;
    let scale = 1.0 / substeps as f64;

    let mut x = vec![0.0; size];
    x[if l == 0 { 0 } else { size - 1 }] = 1.0;
    let mut term = vec![0.0; size];
    let mut next = vec![0.0; size];
    for _ in 0..substeps {
        term.copy_from_slice(&x);
        let mut acc = x.clone();
        for k in 1..=60 {
            apply(&term, &mut next, scale / k as f64);
            std::mem::swap(&mut term, &mut next);
            let tn = term.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            let an = acc.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if tn <= 1e-18 * an {
                break;
            }
        }
        x = acc;
    }
    x.truncate(n);
    x
}

/// Approximates φₗ(J·dt)·v by Newton interpolation at Leja points.
///
/// `matvec` applies J itself; the step size enters through the shift. Terminates as
/// converged once two consecutive increments satisfy ‖dₘ·y‖ ≤ tol·max(1, ‖p‖), and
/// unconverged after 500 terms or on a non-finite iterate.
pub fn apply_phi_leja<A: LinearOperator + ?Sized>(
    l: PhiOrder,
    matvec: &A,
    v: &[f64],
    dt: f64,
    shift: ShiftScale,
    tol: f64,
) -> PhiApplyResult {
    if shift.alpha() < DEGENERATE_ALPHA {
        let s = l.value_at_zero();
        return PhiApplyResult {
            vector: v.iter().map(|x| x * s).collect(),
            iterations: 0,
            converged: true,
            residual: 0.0,
        };
    }
    let nodes = &leja_points().points;
    let c = shift.q * dt;
    let h = shift.theta * dt;
    let coeffs = scaled_divided_differences(l, c, h, nodes);

    let mut p: Vec<f64> = v.iter().map(|x| coeffs[0] * x).collect();
    let mut y = v.to_vec();
    let mut jy = vec![0.0; v.len()];
    let mut small_in_a_row = 0;
    let mut residual = f64::INFINITY;
    for m in 1..MAX_LEJA_POINTS {
        matvec.apply(&y, &mut jy);
        let xi = nodes[m - 1];
        for (yi, &ji) in y.iter_mut().zip(&jy) {
            *yi = (ji - shift.q * *yi) / shift.theta - xi * *yi;
        }
        axpy(coeffs[m], &y, &mut p);
        let incr = coeffs[m].abs() * norm2(&y);
        let pn = norm2(&p);
        if !incr.is_finite() || !pn.is_finite() {
            return PhiApplyResult {
                vector: p,
                iterations: m,
                converged: false,
                residual: f64::INFINITY,
            };
        }
        residual = incr;
        if incr <= tol * pn.max(1.0) {
            small_in_a_row += 1;
            if small_in_a_row == 2 {
                return PhiApplyResult {
                    vector: p,
                    iterations: m,
                    converged: true,
                    residual,
                };
            }
        } else {
            small_in_a_row = 0;
        }
    }
    PhiApplyResult {
        vector: p,
        iterations: MAX_LEJA_POINTS - 1,
        converged: false,
        residual,
    }
}
