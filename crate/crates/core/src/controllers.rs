//! Step-size control.
//!
//! The traditional controller picks the largest step the error estimate allows. The
//! cost controller instead descends ln(cost per unit time) in ln(Δt), where the cost of
//! a step is a proxy such as the number of rhs evaluations. The combined mode takes the
//! smaller of the two proposals.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConstants {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub lambda_c: f64,
    pub delta_c: f64,
    pub safety: f64,
    pub growth_cap: f64,
}

impl Default for ControllerConstants {
    fn default() -> Self {
        Self {
            alpha_c: 0.65241444,
            beta_c: 0.26862269,
            lambda_c: 1.37412002,
            delta_c: 0.64446017,
            safety: 0.9,
            growth_cap: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerMode {
    Traditional,
    Cost,
    Combined,
}

impl ControllerMode {
    pub fn name(self) -> &'static str {
        match self {
            ControllerMode::Traditional => "traditional",
            ControllerMode::Cost => "cost",
            ControllerMode::Combined => "combined",
        }
    }
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "traditional" => Ok(ControllerMode::Traditional),
            "cost" | "proposed" => Ok(ControllerMode::Cost),
            "combined" => Ok(ControllerMode::Combined),
            _ => Err(Error::Config(format!("unknown controller '{s}'"))),
        }
    }
}

/// Δt·(tol/err)^{1/(p+1)} times the safety factor, limited to a change of at most
/// `growth_cap` in either direction.
pub fn traditional_next(dt: f64, err: f64, tol: f64, p: usize, consts: &ControllerConstants) -> f64 {
    let ratio = (tol / err.max(1e-300)).powf(1.0 / (p + 1) as f64);
    let proposed = consts.safety * dt * ratio;
    proposed.clamp(dt / consts.growth_cap, dt * consts.growth_cap)
}

/// The multiplicative factor applied by [`cost_next`], as a function of the
/// log-log cost gradient Δ.
pub fn cost_factor(delta: f64, consts: &ControllerConstants) -> f64 {
    let s = (-consts.alpha_c * (consts.beta_c * delta).tanh()).exp();
    if (1.0..consts.lambda_c).contains(&s) {
        consts.lambda_c
    } else if (consts.delta_c..1.0).contains(&s) {
        consts.delta_c
    } else {
        s
    }
}

/// Next step proposed by the cost controller from the last two accepted steps.
pub fn cost_next(dt: f64, dt_prev: f64, cost: f64, cost_prev: f64, consts: &ControllerConstants) -> f64 {
    let denom = dt.ln() - dt_prev.ln();
    if denom.abs() < 1e-12 {
        return dt * consts.lambda_c;
    }
    let delta = (cost.ln() - cost_prev.ln()) / denom;
    dt * cost_factor(delta, consts)
}

pub fn combine(dt_cost: f64, dt_trad: f64) -> f64 {
    dt_cost.min(dt_trad)
}

pub fn accept(err: f64, tol: f64) -> bool {
    err <= tol
}

/// History the cost controller needs between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub mode: ControllerMode,
    pub consts: ControllerConstants,
    /// Step size and cost per unit time of the last accepted step.
    pub prev: Option<(f64, f64)>,
}

impl ControllerState {
    pub fn new(mode: ControllerMode) -> Self {
        Self {
            mode,
            consts: ControllerConstants::default(),
            prev: None,
        }
    }

    /// Proposes the step after an accepted step of size `dt` with error `err` that
    /// consumed `work` units; records the step as history.
    pub fn after_accept(&mut self, dt: f64, err: f64, tol: f64, p: usize, work: f64) -> f64 {
        let trad = traditional_next(dt, err, tol, p, &self.consts);
        let cost = work.max(1.0) / dt;
        let next = match (self.mode, self.prev) {
            (ControllerMode::Traditional, _) | (_, None) => trad,
            (ControllerMode::Cost, Some((dt_prev, cost_prev))) => cost_next(dt, dt_prev, cost, cost_prev, &self.consts),
            (ControllerMode::Combined, Some((dt_prev, cost_prev))) => {
                combine(cost_next(dt, dt_prev, cost, cost_prev, &self.consts), trad)
            }
        };
        self.prev = Some((dt, cost));
        next
    }

    /// Retry size after a rejected step. History is left untouched.
    pub fn after_reject(&self, dt: f64, err: f64, tol: f64, p: usize) -> f64 {
        traditional_next(dt, err, tol, p, &self.consts).min(dt * self.consts.safety)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_safety() -> ControllerConstants {
        ControllerConstants {
            safety: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn traditional_examples() {
        let c = unit_safety();
        assert_relative_eq!(traditional_next(0.1, 1e-4, 1e-4, 3, &c), 0.1, max_relative = 1e-15);
        assert_relative_eq!(traditional_next(0.1, 16e-4, 1e-4, 3, &c), 0.05, max_relative = 1e-15);
        assert_relative_eq!(traditional_next(0.1, 1e-16, 1e-4, 3, &c), 0.2, max_relative = 1e-15);
        assert_relative_eq!(traditional_next(0.1, 1.0, 1e-4, 3, &c), 0.05, max_relative = 1e-15);
    }

    #[test]
    fn cost_examples() {
        let c = ControllerConstants::default();
        assert!((cost_next(0.1, 0.05, 100.0, 100.0, &c) - 0.137412002).abs() < 1e-12);
        let s = (-0.65241444f64 * 0.26862269f64.tanh()).exp();
        assert!((s - 0.8427).abs() < 1e-4);
        assert!((cost_next(0.1, 0.05, 200.0, 100.0, &c) - 0.064446017).abs() < 1e-12);
        let expect = 0.1 * (0.65241444f64 * (0.26862269f64 * (1e6f64.ln() / (0.5f64).ln())).tanh().abs()).exp();
        assert!((cost_next(0.1, 0.2, 1e6, 1.0, &c) - expect).abs() < 1e-12);
        assert!((cost_next(0.1, 0.2, 1e6, 1.0, &c) - 0.19202).abs() < 1e-4);
        assert_eq!(cost_next(0.1, 0.1, 3.0, 1.0, &c), 0.1 * c.lambda_c);
    }

    #[test]
    fn combine_and_accept() {
        assert_eq!(combine(0.1, 0.2), 0.1);
        assert_eq!(combine(0.3, 0.2), 0.2);
        assert_eq!(combine(0.25, 0.25), 0.25);
        assert!(accept(0.5e-3, 1e-3));
        assert!(accept(1e-3, 1e-3));
        assert!(!accept(2e-3, 1e-3));
    }

    #[test]
    fn traditional_fixed_point() {
        let c = ControllerConstants::default();
        let p = 4;
        let tol = 1e-5;
        let err = c.safety.powi(p as i32 + 1) * tol;
        let mut dt = 0.37;
        for _ in 0..10 {
            dt = traditional_next(dt, err, tol, p, &c);
        }
        assert_relative_eq!(dt, 0.37, max_relative = 1e-12);
    }

    #[test]
    fn first_step_is_traditional() {
        let mut st = ControllerState::new(ControllerMode::Cost);
        let next = st.after_accept(0.1, 1e-5, 1e-5, 3, 40.0);
        assert_relative_eq!(next, 0.09, max_relative = 1e-12);
        assert_eq!(st.prev, Some((0.1, 400.0)));
    }

    proptest! {
        #[test]
        fn cost_factor_is_total_and_bounded(delta in -1e6f64..1e6) {
            let c = ControllerConstants::default();
            let f = cost_factor(delta, &c);
            let lo = c.delta_c.min((-c.alpha_c).exp());
            let hi = c.lambda_c.max(c.alpha_c.exp());
            prop_assert!(f >= lo - 1e-15 && f <= hi + 1e-15);
            prop_assert!(f >= 0.5207 && f <= 1.9203);
            // never a minute change
            prop_assert!(!(f > c.delta_c && f < 1.0));
            prop_assert!(!(f >= 1.0 && f < c.lambda_c));
        }

        #[test]
        fn combined_never_exceeds_traditional(
            dt in 1e-4f64..1.0, dt_prev in 1e-4f64..1.0,
            w in 1.0f64..1e4, w_prev in 1.0f64..1e4, err in 1e-12f64..1e-1,
        ) {
            let mut st = ControllerState::new(ControllerMode::Combined);
            st.prev = Some((dt_prev, w_prev / dt_prev));
            let trad = traditional_next(dt, err, 1e-4, 4, &st.consts);
            let next = st.after_accept(dt, err, 1e-4, 4, w);
            prop_assert!(next <= trad);
        }
    }
}
