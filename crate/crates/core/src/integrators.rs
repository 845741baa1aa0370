//! One-step maps for the exponential schemes and the explicit Runge–Kutta baselines.
//!
//! Every exponential scheme linearizes at uⁿ, so 𝓕(w) below always means
//! f(w) − J(uⁿ)·w. Stage combinations are written in terms of the differences
//! D(w) = 𝓕(w) − 𝓕(uⁿ); all coefficient rows sum to zero, so this is exact algebra.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::krylov::{apply_phi_krylov, DEFAULT_M_MAX};
use crate::leja::{apply_phi_leja, shift_and_scale, ShiftScale, DEGENERATE_ALPHA};
use crate::linearization::{FrozenLinearization, Rhs, SpectralEstimate};
use crate::operator::norm2;
use crate::phi::PhiOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    ExpEuler,
    RosEuler,
    Exprb43,
    Exprb54s4,
    Epirk5p1,
    Rk43,
    Dopri54,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::ExpEuler,
        SchemeId::RosEuler,
        SchemeId::Exprb43,
        SchemeId::Exprb54s4,
        SchemeId::Epirk5p1,
        SchemeId::Rk43,
        SchemeId::Dopri54,
    ];

    /// Classical order p.
    pub fn order(self) -> usize {
        match self {
            SchemeId::ExpEuler | SchemeId::RosEuler => 2,
            SchemeId::Exprb43 | SchemeId::Rk43 => 4,
            SchemeId::Exprb54s4 | SchemeId::Epirk5p1 | SchemeId::Dopri54 => 5,
        }
    }

    pub fn embedded_order(self) -> Option<usize> {
        match self {
            SchemeId::ExpEuler | SchemeId::RosEuler => None,
            other => Some(other.order() - 1),
        }
    }

    pub fn is_exponential(self) -> bool {
        !matches!(self, SchemeId::Rk43 | SchemeId::Dopri54)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::ExpEuler => "exp-euler",
            SchemeId::RosEuler => "ros-euler",
            SchemeId::Exprb43 => "exprb43",
            SchemeId::Exprb54s4 => "exprb54s4",
            SchemeId::Epirk5p1 => "epirk5p1",
            SchemeId::Rk43 => "rk43",
            SchemeId::Dopri54 => "dopri54",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == lower || id.name().replace('-', "_") == lower)
            .ok_or_else(|| Error::Config(format!("unknown integrator '{s}'")))
    }
}

/// Which engine evaluates φ-function actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhiMethod {
    Leja,
    Krylov,
}

impl PhiMethod {
    pub fn name(self) -> &'static str {
        match self {
            PhiMethod::Leja => "leja",
            PhiMethod::Krylov => "krylov",
        }
    }
}

impl fmt::Display for PhiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "leja" => Ok(PhiMethod::Leja),
            "krylov" => Ok(PhiMethod::Krylov),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// EPIRK5P1 coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epirk5p1Coefficients {
    pub a11: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub g11: f64,
    pub g21: f64,
    pub g22: f64,
    pub g31: f64,
    pub g32: f64,
    pub g33: f64,
}

impl Epirk5p1Coefficients {
    pub const FIFTH_ORDER: Self = Self {
        a11: 0.35129592695058193092,
        a21: 0.84405472011657126298,
        a22: 1.6905891609568963624,
        b1: 1.0,
        b2: 1.2727127317356892397,
        b3: 2.271459926542262275,
        g11: 0.35129592695058193092,
        g21: 0.84405472011657126298,
        g22: 0.5,
        g31: 1.0,
        g32: 0.71111095364366870359,
        g33: 0.62378111953371494809,
    };

    /// Embedded fourth-order variant: g32 = 0.5, g33 = 1.
    pub const EMBEDDED: Self = Self {
        g32: 0.5,
        g33: 1.0,
        ..Self::FIFTH_ORDER
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub new_state: Vec<f64>,
    /// Relative l2 norm of the embedded difference (0 for schemes without one).
    pub error_estimate: f64,
    pub rhs_calls: usize,
    pub phi_iterations: usize,
    pub phi_applications: usize,
    pub converged: bool,
}

/// Engine configuration for one step.
#[derive(Debug, Clone, Copy)]
pub struct PhiEngine {
    pub method: PhiMethod,
    /// Leja shift derived from the spectral estimate of J.
    pub shift: ShiftScale,
    pub krylov_m_max: usize,
}

impl PhiEngine {
    pub fn leja(estimate: &SpectralEstimate) -> Self {
        let shift = if estimate.alpha < DEGENERATE_ALPHA {
            ShiftScale::degenerate()
        } else {
            shift_and_scale(estimate.alpha).expect("alpha checked positive")
        };
        Self {
            method: PhiMethod::Leja,
            shift,
            krylov_m_max: DEFAULT_M_MAX,
        }
    }

    pub fn krylov() -> Self {
        Self {
            method: PhiMethod::Krylov,
            shift: ShiftScale::degenerate(),
            krylov_m_max: DEFAULT_M_MAX,
        }
    }

    pub fn new(method: PhiMethod, estimate: &SpectralEstimate) -> Self {
        match method {
            PhiMethod::Leja => Self::leja(estimate),
            PhiMethod::Krylov => Self::krylov(),
        }
    }
}

/// Bookkeeping for the φ applications of a single step.
struct PhiContext<'l, 'a, R> {
    lin: &'l FrozenLinearization<'a, R>,
    engine: PhiEngine,
    dt: f64,
    tol: f64,
    iterations: usize,
    applications: usize,
    converged: bool,
}

impl<R: Rhs> PhiContext<'_, '_, R> {
    /// φₗ(c·J·dt)·(v·dt).
    fn apply(&mut self, l: usize, c: f64, v: &[f64]) -> Vec<f64> {
        self.applications += 1;
        let l = PhiOrder::new(l).expect("scheme orders are ≤ 4");
        let scaled: Vec<f64> = v.iter().map(|x| x * self.dt).collect();
        if norm2(&scaled) == 0.0 {
            return scaled;
        }
        let h = c * self.dt;
        let res = match self.engine.method {
            PhiMethod::Leja => apply_phi_leja(l, self.lin, &scaled, h, self.engine.shift, self.tol),
            PhiMethod::Krylov => {
                apply_phi_krylov(l, self.lin, &scaled, h, self.tol, self.engine.krylov_m_max)
                    .expect("non-zero vector checked above")
            }
        };
        self.iterations += res.iterations;
        self.converged &= res.converged;
        res.vector
    }
}

fn combine(u: &[f64], terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = u.to_vec();
    for &(c, t) in terms {
        for (o, x) in out.iter_mut().zip(t) {
            *o += c * x;
        }
    }
    out
}

fn lin_comb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let n = terms[0].1.len();
    let mut out = vec![0.0; n];
    for &(c, t) in terms {
        for (o, x) in out.iter_mut().zip(t) {
            *o += c * x;
        }
    }
    out
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Relative discrete l2 distance ‖a − b‖/‖b‖ (absolute when b = 0).
pub fn error_norm(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let nb = norm2(b);
    Ok(if nb == 0.0 { diff } else { diff / nb })
}

/// Advances `lin.base_state()` by `dt` with the given scheme.
///
/// φ actions run at tolerance `tol`. Explicit schemes ignore `engine`.
pub fn step<R: Rhs>(
    scheme: SchemeId,
    lin: &FrozenLinearization<'_, R>,
    dt: f64,
    engine: PhiEngine,
    tol: f64,
) -> StepResult {
    let calls_before = lin.operator().calls();
    let mut ctx = PhiContext {
        lin,
        engine,
        dt,
        tol,
        iterations: 0,
        applications: 0,
        converged: true,
    };
    let (new_state, low) = match scheme {
        SchemeId::ExpEuler | SchemeId::RosEuler => (rosenbrock_euler(&mut ctx), None),
        SchemeId::Exprb43 => {
            let (hi, lo) = exprb43(&mut ctx);
            (hi, Some(lo))
        }
        SchemeId::Exprb54s4 => {
            let (hi, lo) = exprb54s4(&mut ctx);
            (hi, Some(lo))
        }
        SchemeId::Epirk5p1 => {
            let (hi, lo) = epirk5p1(&mut ctx);
            (hi, Some(lo))
        }
        SchemeId::Rk43 => {
            let (hi, lo) = explicit_rk(lin, dt, &RK43);
            (hi, Some(lo))
        }
        SchemeId::Dopri54 => {
            let (hi, lo) = explicit_rk(lin, dt, &DOPRI54);
            (hi, Some(lo))
        }
    };
    let error_estimate = match &low {
        Some(lo) => error_norm(lo, &new_state).expect("same length"),
        None => 0.0,
    };
    let finite = all_finite(&new_state) && error_estimate.is_finite();
    StepResult {
        new_state,
        error_estimate: if finite { error_estimate } else { f64::INFINITY },
        rhs_calls: lin.operator().calls() - calls_before,
        phi_iterations: ctx.iterations,
        phi_applications: ctx.applications,
        converged: ctx.converged && finite,
    }
}

fn rosenbrock_euler<R: Rhs>(ctx: &mut PhiContext<'_, '_, R>) -> Vec<f64> {
    let u = ctx.lin.base_state();
    let fu = ctx.lin.base_rhs();
    let p1 = ctx.apply(1, 1.0, fu);
    combine(u, &[(1.0, &p1)])
}

fn exprb43<R: Rhs>(ctx: &mut PhiContext<'_, '_, R>) -> (Vec<f64>, Vec<f64>) {
    let lin = ctx.lin;
    let op = lin.operator();
    let u = lin.base_state();
    let fu = lin.base_rhs();

    let p_half = ctx.apply(1, 0.5, fu);
    let a = combine(u, &[(0.5, &p_half)]);
    let da = lin.remainder_difference(&a, &op.eval_vec(&a));

    let p1 = ctx.apply(1, 1.0, fu);
    let q = ctx.apply(1, 1.0, &da);
    let b = combine(u, &[(1.0, &p1), (1.0, &q)]);
    let db = lin.remainder_difference(&b, &op.eval_vec(&b));

    // −14𝓕(u) + 16𝓕(a) − 2𝓕(b) and 36𝓕(u) − 48𝓕(a) + 12𝓕(b)
    let r3 = ctx.apply(3, 1.0, &lin_comb(&[(16.0, &da), (-2.0, &db)]));
    let r4 = ctx.apply(4, 1.0, &lin_comb(&[(-48.0, &da), (12.0, &db)]));

    let third = combine(u, &[(1.0, &p1), (1.0, &r3)]);
    let fourth = combine(&third, &[(1.0, &r4)]);
    (fourth, third)
}

fn exprb54s4<R: Rhs>(ctx: &mut PhiContext<'_, '_, R>) -> (Vec<f64>, Vec<f64>) {
    let lin = ctx.lin;
    let op = lin.operator();
    let u = lin.base_state();
    let fu = lin.base_rhs();

    let pa = ctx.apply(1, 0.25, fu);
    let a = combine(u, &[(0.25, &pa)]);
    let da = lin.remainder_difference(&a, &op.eval_vec(&a));

    let pb = ctx.apply(1, 0.5, fu);
    let qb = ctx.apply(3, 0.5, &da);
    let b = combine(u, &[(0.5, &pb), (4.0, &qb)]);
    let db = lin.remainder_difference(&b, &op.eval_vec(&b));

    let pc = ctx.apply(1, 0.9, fu);
    let qc = ctx.apply(3, 0.9, &db);
    let c = combine(u, &[(0.9, &pc), (729.0 / 125.0, &qc)]);
    let dc = lin.remainder_difference(&c, &op.eval_vec(&c));

    let p1 = ctx.apply(1, 1.0, fu);
    let f1 = lin_comb(&[(64.0, &da), (-8.0, &db)]);
    let f2 = lin_comb(&[(-60.0, &da), (-285.0 / 8.0, &db), (125.0 / 8.0, &dc)]);
    let f3 = lin_comb(&[(18.0, &db), (-250.0 / 81.0, &dc)]);
    let f4 = lin_comb(&[(-60.0, &db), (500.0 / 27.0, &dc)]);

    let r1 = ctx.apply(3, 1.0, &f1);
    let r2 = ctx.apply(4, 1.0, &f2);
    let fourth = combine(u, &[(1.0, &p1), (1.0, &r1), (1.0, &r2)]);
    let r3 = ctx.apply(3, 1.0, &f3);
    let r4 = ctx.apply(4, 1.0, &f4);
    let fifth = combine(u, &[(1.0, &p1), (1.0, &r3), (1.0, &r4)]);
    (fifth, fourth)
}

fn epirk5p1<R: Rhs>(ctx: &mut PhiContext<'_, '_, R>) -> (Vec<f64>, Vec<f64>) {
    let k = Epirk5p1Coefficients::FIFTH_ORDER;
    let e = Epirk5p1Coefficients::EMBEDDED;
    let lin = ctx.lin;
    let op = lin.operator();
    let u = lin.base_state();
    let fu = lin.base_rhs();

    let pa = ctx.apply(1, k.g11, fu);
    let a = combine(u, &[(k.a11, &pa)]);
    let da = lin.remainder_difference(&a, &op.eval_vec(&a));

    let pb = ctx.apply(1, k.g21, fu);
    let qb = ctx.apply(1, k.g22, &da);
    let b = combine(u, &[(k.a21, &pb), (k.a22, &qb)]);
    let db = lin.remainder_difference(&b, &op.eval_vec(&b));

    // 𝓕(u) − 2𝓕(a) + 𝓕(b)
    let second = lin_comb(&[(-2.0, &da), (1.0, &db)]);
    let p1 = ctx.apply(1, k.g31, fu);
    let r2 = ctx.apply(1, k.g32, &da);
    let r3 = ctx.apply(3, k.g33, &second);
    let fifth = combine(u, &[(k.b1, &p1), (k.b2, &r2), (k.b3, &r3)]);

    let s2 = ctx.apply(1, e.g32, &da);
    let s3 = ctx.apply(3, e.g33, &second);
    let fourth = combine(u, &[(e.b1, &p1), (e.b2, &s2), (e.b3, &s3)]);
    (fifth, fourth)
}

/// Explicit embedded pair: lower-triangular `a`, high-order weights `b`,
/// low-order weights `b_low`.
pub struct ButcherTableau {
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    pub b_low: &'static [f64],
}

/// Zonneveld 4(3) pair.
pub const RK43: ButcherTableau = ButcherTableau {
    a: &[
        &[],
        &[0.5],
        &[0.0, 0.5],
        &[0.0, 0.0, 1.0],
        &[5.0 / 32.0, 7.0 / 32.0, 13.0 / 32.0, -1.0 / 32.0],
    ],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 0.0],
    b_low: &[-0.5, 7.0 / 3.0, 7.0 / 3.0, 13.0 / 6.0, -16.0 / 3.0],
};

/// Dormand–Prince 5(4).
pub const DOPRI54: ButcherTableau = ButcherTableau {
    a: &[
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    b_low: &[
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ],
};

fn explicit_rk<R: Rhs>(lin: &FrozenLinearization<'_, R>, dt: f64, tab: &ButcherTableau) -> (Vec<f64>, Vec<f64>) {
    let op = lin.operator();
    let u = lin.base_state();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(tab.b.len());
    k.push(lin.base_rhs().to_vec());
    for row in tab.a.iter().skip(1) {
        let mut stage = u.to_vec();
        for (coef, kj) in row.iter().zip(&k) {
            if *coef != 0.0 {
                for (s, x) in stage.iter_mut().zip(kj) {
                    *s += dt * coef * x;
                }
            }
        }
        k.push(op.eval_vec(&stage));
    }
    let weighted = |w: &[f64]| {
        let mut out = u.to_vec();
        for (coef, kj) in w.iter().zip(&k) {
            if *coef != 0.0 {
                for (o, x) in out.iter_mut().zip(kj) {
                    *o += dt * coef * x;
                }
            }
        }
        out
    };
    (weighted(tab.b), weighted(tab.b_low))
}
