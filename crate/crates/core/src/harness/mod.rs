//! Experiment driver: the adaptive time loop, reference runs, work-precision sweeps
//! and ∇·B time series.

mod config;
mod sweep;

pub use config::{parse_config_text, parse_sweep, ConfigMap};
pub use sweep::{divb_series, make_reference, reference_path, require_reference, work_precision, CSV_HEADER, REFERENCE_TOL};

use std::path::PathBuf;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::controllers::{traditional_next, ControllerMode, ControllerState};
use crate::error::{Error, Result};
use crate::integrators::{step, PhiEngine, PhiMethod, SchemeId};
use crate::linearization::{estimate_alpha, FrozenLinearization, RhsOperator, SpectralEstimate, SpectralPolicy};
use crate::mhd::{conserved_totals, max_abs_div_b, write_checkpoint, MhdRhs, StateGrid};
use crate::scenarios::ScenarioSpec;

/// Consecutive rejections (or unconverged φ retries) before a run gives up.
pub const MAX_CONSECUTIVE_REJECTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub scheme: SchemeId,
    pub method: PhiMethod,
    pub controller: ControllerMode,
    pub tol: f64,
    pub spectrum_interval: usize,
    pub output_dir: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    /// Simulation-time spacing of checkpoints written to `output_dir`.
    pub checkpoint_every: Option<f64>,
    pub rng_seed: u64,
    pub max_steps: usize,
    pub max_wall_seconds: f64,
    /// Step size for schemes without an error estimate; defaults to the CFL guess.
    pub fixed_dt: Option<f64>,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec) -> Self {
        let tol = scenario.tol;
        Self {
            scenario,
            scheme: SchemeId::Exprb43,
            method: PhiMethod::Leja,
            controller: ControllerMode::Combined,
            tol,
            spectrum_interval: 50,
            output_dir: None,
            reference: None,
            checkpoint_every: None,
            rng_seed: 0,
            max_steps: 1_000_000,
            max_wall_seconds: 3600.0,
            fixed_dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-12..=1e-1).contains(&self.tol) {
            return Err(Error::Config(format!("tol {} outside [1e-12, 1e-1]", self.tol)));
        }
        if self.spectrum_interval == 0 {
            return Err(Error::Config("spectrum interval must be at least 1".into()));
        }
        if self.scenario.nx < 3 || self.scenario.ny < 3 {
            return Err(Error::Config("grid needs at least 3 cells per axis".into()));
        }
        if !(self.scenario.t_final >= 0.0 && self.scenario.t_final.is_finite()) {
            return Err(Error::Config(format!("bad final time {}", self.scenario.t_final)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub accepted: bool,
    pub error_estimate: f64,
    /// All rhs evaluations of this attempt, spectral estimation included.
    pub rhs_evals: usize,
    pub spectral_rhs_evals: usize,
    pub phi_iters: usize,
    pub alpha: f64,
    /// Proposal for the next attempt and what the traditional rule alone would give.
    pub dt_next: f64,
    pub dt_traditional: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: Vec<StepRecord>,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub spectral_rhs_evals: usize,
    pub phi_iters: usize,
    pub wall_seconds: f64,
    pub checksum: String,
    pub initial_divb: f64,
    pub max_divb: f64,
    /// Relative change of total mass between start and end.
    pub mass_drift: f64,
    pub t_final: f64,
    pub final_state: StateGrid,
}

/// Hex SHA-256 over the little-endian bytes of a state vector.
pub fn state_checksum(data: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in data {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Advective CFL surrogate used as the first step size.
pub fn initial_dt(u: &StateGrid, params: &crate::mhd::MhdParams) -> f64 {
    let speed = u.max_wave_speed(params).max(1e-12);
    0.1 * u.dx.min(u.dy) / speed
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_observed(config, None, |_, _| {})
}

/// [`run`] that also lands exactly on every multiple of `sample_every` and hands the
/// state at t = 0 and at each such time to `observe`.
pub fn run_observed(
    config: &RunConfig,
    sample_every: Option<f64>,
    mut observe: impl FnMut(f64, &StateGrid),
) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let (u0, params) = config.scenario.initial_state()?;
    let op = RhsOperator::new(MhdRhs::new(&u0, params));
    let t_final = config.scenario.t_final;
    let tol = config.tol;
    let policy = SpectralPolicy {
        interval: config.spectrum_interval,
        seed: config.rng_seed,
        ..Default::default()
    };
    let p_est = config.scheme.embedded_order();
    let uses_spectrum = config.scheme.is_exponential() && config.method == PhiMethod::Leja;

    let mut state = u0.clone();
    let mut t = 0.0;
    let initial_mass = conserved_totals(&u0).mass;
    let initial_divb = max_abs_div_b(&u0, &params);
    let mut max_divb = initial_divb;
    observe(0.0, &state);
    let mut next_sample = sample_every.map(|s| (1, s));
    let mut next_checkpoint = config.checkpoint_every.map(|c| (1usize, c));

    let base_dt = config.fixed_dt.unwrap_or_else(|| initial_dt(&u0, &params));
    let mut dt = base_dt;
    let mut controller = ControllerState::new(config.controller);
    let mut spectral: Option<SpectralEstimate> = None;
    let mut records = Vec::new();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let (mut rhs_total, mut spectral_total, mut phi_total) = (0usize, 0usize, 0usize);

    let abort = |t: f64, state: &StateGrid, reason: String| -> Error {
        if let Some(dir) = &config.output_dir {
            let _ = std::fs::create_dir_all(dir);
            let _ = write_checkpoint(&dir.join("abort.bin"), t, state);
        }
        Error::Abort { t, reason }
    };

    while t < t_final {
        let calls_at_lin = op.calls();
        let lin = FrozenLinearization::new(&op, &state.data);
        let mut lin_calls = op.calls() - calls_at_lin;
        let mut spectral_calls = 0;
        if uses_spectrum {
            let est = estimate_alpha(&lin, spectral.as_ref(), &policy, (accepted + rejected) as u64);
            spectral_calls = est.rhs_calls;
            spectral = Some(est);
        }
        let engine = match &spectral {
            Some(est) => PhiEngine::new(config.method, est),
            None => PhiEngine::new(config.method, &SpectralEstimate::fixed(0.0)),
        };

        let mut consecutive = 0;
        loop {
            if accepted + rejected >= config.max_steps {
                return Err(abort(t, &state, format!("step budget of {} exhausted", config.max_steps)));
            }
            if started.elapsed().as_secs_f64() > config.max_wall_seconds {
                return Err(abort(t, &state, "wall-clock budget exhausted".into()));
            }
            let mut stop = t_final;
            if let Some((k, s)) = next_sample {
                stop = stop.min(k as f64 * s);
            }
            if let Some((k, c)) = next_checkpoint {
                stop = stop.min(k as f64 * c);
            }
            let landing = t + dt >= stop * (1.0 - 1e-14) - 1e-300;
            let dt_try = if landing { stop - t } else { dt };

            let calls_before = op.calls();
            let res = step(config.scheme, &lin, dt_try, engine, tol);
            let step_calls = op.calls() - calls_before + lin_calls + spectral_calls;
            rhs_total += step_calls;
            spectral_total += spectral_calls;
            phi_total += res.phi_iterations;
            let alpha = spectral.as_ref().map_or(0.0, |s| s.alpha);
            let spec_this = spectral_calls;
            lin_calls = 0;
            spectral_calls = 0;

            let finite = res.new_state.iter().all(|v| v.is_finite()) && res.error_estimate.is_finite();
            if !res.converged || !finite {
                rejected += 1;
                consecutive += 1;
                let next = dt_try * 0.5;
                records.push(StepRecord {
                    t,
                    dt: dt_try,
                    accepted: false,
                    error_estimate: f64::INFINITY,
                    rhs_evals: step_calls,
                    spectral_rhs_evals: spec_this,
                    phi_iters: res.phi_iterations,
                    alpha,
                    dt_next: next,
                    dt_traditional: next,
                });
                if consecutive >= MAX_CONSECUTIVE_REJECTS {
                    let why = if finite { "phi iteration did not converge" } else { "non-finite state" };
                    return Err(abort(t, &state, format!("{why} after {consecutive} retries")));
                }
                dt = next;
                continue;
            }

            let err = res.error_estimate;
            let ok = match p_est {
                Some(_) => crate::controllers::accept(err, tol),
                None => true,
            };
            if ok {
                let candidate = state.with_data(res.new_state);
                if let Err(e) = candidate.validate(&params) {
                    rejected += 1;
                    consecutive += 1;
                    records.push(StepRecord {
                        t,
                        dt: dt_try,
                        accepted: false,
                        error_estimate: err,
                        rhs_evals: step_calls,
                        spectral_rhs_evals: spec_this,
                        phi_iters: res.phi_iterations,
                        alpha,
                        dt_next: dt_try * 0.5,
                        dt_traditional: dt_try * 0.5,
                    });
                    if consecutive >= MAX_CONSECUTIVE_REJECTS {
                        return Err(abort(t, &state, format!("unphysical state: {e}")));
                    }
                    dt = dt_try * 0.5;
                    continue;
                }
                let (next, trad) = match p_est {
                    Some(p) => {
                        let trad = traditional_next(dt_try, err, tol, p, &controller.consts);
                        (controller.after_accept(dt_try, err, tol, p, step_calls as f64), trad)
                    }
                    None => (base_dt, base_dt),
                };
                state = candidate;
                t = if landing { stop } else { t + dt_try };
                accepted += 1;
                records.push(StepRecord {
                    t,
                    dt: dt_try,
                    accepted: true,
                    error_estimate: err,
                    rhs_evals: step_calls,
                    spectral_rhs_evals: spec_this,
                    phi_iters: res.phi_iterations,
                    alpha,
                    dt_next: next,
                    dt_traditional: trad,
                });
                // A clipped step says nothing about the step the controller wanted.
                dt = if landing && dt_try < dt { dt } else { next };
                max_divb = max_divb.max(max_abs_div_b(&state, &params));
                if let Some((k, s)) = next_sample {
                    if t >= k as f64 * s {
                        observe(t, &state);
                        next_sample = Some((k + 1, s));
                    }
                }
                if let Some((k, c)) = next_checkpoint {
                    if t >= k as f64 * c {
                        if let Some(dir) = &config.output_dir {
                            std::fs::create_dir_all(dir)?;
                            write_checkpoint(&dir.join(format!("checkpoint_{k:05}.bin")), t, &state)?;
                        }
                        next_checkpoint = Some((k + 1, c));
                    }
                }
                break;
            }
            rejected += 1;
            consecutive += 1;
            let next = controller.after_reject(dt_try, err, tol, p_est.unwrap_or(1));
            records.push(StepRecord {
                t,
                dt: dt_try,
                accepted: false,
                error_estimate: err,
                rhs_evals: step_calls,
                spectral_rhs_evals: spec_this,
                phi_iters: res.phi_iterations,
                alpha,
                dt_next: next,
                dt_traditional: next,
            });
            if consecutive >= MAX_CONSECUTIVE_REJECTS {
                return Err(abort(t, &state, format!("{consecutive} consecutive rejections")));
            }
            dt = next;
        }
    }

    let final_mass = conserved_totals(&state).mass;
    Ok(RunReport {
        accepted,
        rejected,
        rhs_evals: rhs_total,
        spectral_rhs_evals: spectral_total,
        phi_iters: phi_total,
        wall_seconds: started.elapsed().as_secs_f64(),
        checksum: state_checksum(&state.data),
        initial_divb,
        max_divb,
        mass_drift: (final_mass - initial_mass).abs() / initial_mass.abs(),
        t_final: t,
        final_state: state,
        steps: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(tf: f64) -> RunConfig {
        let spec = ScenarioSpec::by_name("khi-III").unwrap().with_grid(16, 8).with_t_final(tf);
        RunConfig {
            tol: 1e-3,
            ..RunConfig::new(spec)
        }
    }

    #[test]
    fn zero_final_time_takes_no_steps() {
        let cfg = small(0.0);
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.accepted + rep.rejected, 0);
        let (u0, _) = cfg.scenario.initial_state().unwrap();
        assert_eq!(rep.final_state, u0);
    }

    #[test]
    fn runs_are_deterministic_and_clipped() {
        let cfg = small(0.02);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.checksum, b.checksum);
        assert_eq!(a.t_final, 0.02);
        let total: f64 = a.steps.iter().filter(|s| s.accepted).map(|s| s.dt).sum();
        assert!((total - 0.02).abs() < 1e-12);
        assert_eq!(a.accepted + a.rejected, a.steps.len());
        assert_eq!(a.rhs_evals, a.steps.iter().map(|s| s.rhs_evals).sum::<usize>());
        assert_eq!(a.phi_iters, a.steps.iter().map(|s| s.phi_iters).sum::<usize>());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small(0.1);
        cfg.tol = 1.0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let mut cfg = small(0.1);
        cfg.spectrum_interval = 0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn step_budget_aborts() {
        let mut cfg = small(0.5);
        cfg.max_steps = 3;
        assert!(matches!(run(&cfg), Err(Error::Abort { .. })));
    }

    #[test]
    fn observation_times_are_hit() {
        let cfg = small(0.03);
        let mut seen = Vec::new();
        run_observed(&cfg, Some(0.01), |t, _| seen.push(t)).unwrap();
        assert_eq!(seen.len(), 4);
        for (k, t) in seen.iter().enumerate() {
            assert!((t - 0.01 * k as f64).abs() < 1e-15);
        }
    }
}
