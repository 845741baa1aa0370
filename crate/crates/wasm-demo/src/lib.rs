//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three things are exposed: the Leja interpolation error of φₗ on [−α, 0] as nodes are
//! added, the step-size factor of the cost controller, and a small EXPRB43/Leja MHD run
//! that can be advanced one accepted step at a time.

use wasm_bindgen::prelude::*;

use expint_mhd::controllers::{accept, cost_factor, ControllerConstants, ControllerMode, ControllerState};
use expint_mhd::harness::initial_dt;
use expint_mhd::integrators::{step, PhiEngine, SchemeId};
use expint_mhd::leja::{leja_points, shift_and_scale};
use expint_mhd::linearization::{estimate_alpha, FrozenLinearization, RhsOperator, SpectralEstimate, SpectralPolicy};
use expint_mhd::mhd::{field, max_abs_div_b, MhdParams, MhdRhs, StateGrid};
use expint_mhd::phi::{divided_differences, phi_scalar};
use expint_mhd::scenarios::ScenarioSpec;
use expint_mhd::PhiOrder;

const MAX_RETRIES: usize = 10;

/// The first `count` cached Leja points on [−2, 2].
#[wasm_bindgen]
pub fn leja_nodes(count: usize) -> Vec<f64> {
    let pts = &leja_points().points;
    pts[..count.min(pts.len())].to_vec()
}

/// Max |pₘ(z) − φₗ(z)| over 256 sample points of [−α, 0] for m = 1..=max_nodes, where
/// pₘ interpolates φₗ at the first m scaled Leja nodes.
pub fn interpolation_errors(alpha: f64, order: usize, max_nodes: usize) -> Result<Vec<f64>, String> {
    let l = PhiOrder::new(order).map_err(|e| e.to_string())?;
    let s = shift_and_scale(alpha).map_err(|e| e.to_string())?;
    let m = max_nodes.clamp(1, leja_points().len());
    let nodes: Vec<f64> = leja_points().points[..m].iter().map(|x| s.q + s.theta * x).collect();
    let table = divided_differences(l, &nodes).map_err(|e| e.to_string())?;
    let mut worst = vec![0.0f64; m];
    for i in 0..256 {
        let z = -alpha * i as f64 / 255.0;
        let exact = phi_scalar(l, z);
        let (mut sum, mut prod) = (0.0, 1.0);
        for k in 0..m {
            sum += table.coeffs[k] * prod;
            prod *= z - nodes[k];
            worst[k] = worst[k].max((sum - exact).abs());
        }
    }
    Ok(worst)
}

#[wasm_bindgen]
pub fn leja_error_curve(alpha: f64, order: usize, max_nodes: usize) -> Result<Vec<f64>, JsError> {
    interpolation_errors(alpha, order, max_nodes).map_err(|e| JsError::new(&e))
}

/// Interleaved (Δ, factor) pairs of the cost controller for Δ on [lo, hi].
#[wasm_bindgen]
pub fn cost_factor_curve(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let consts = ControllerConstants::default();
    let n = samples.max(2);
    (0..n)
        .flat_map(|i| {
            let delta = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            [delta, cost_factor(delta, &consts)]
        })
        .collect()
}

/// An MHD run advanced by EXPRB43 with Leja φ evaluation and the combined controller.
#[wasm_bindgen]
pub struct Simulation {
    op: RhsOperator<MhdRhs>,
    state: StateGrid,
    params: MhdParams,
    t: f64,
    dt: f64,
    tol: f64,
    controller: ControllerState,
    policy: SpectralPolicy,
    spectral: Option<SpectralEstimate>,
    accepted: usize,
    rejected: usize,
    rhs_evals: usize,
}

impl Simulation {
    /// `scenario` is a preset name such as "khi-III" or "recon-VI"; the grid is n × n.
    pub fn create(scenario: &str, n: usize, tol: f64) -> Result<Self, String> {
        if !(4..=256).contains(&n) {
            return Err(format!("grid size {n} outside 4..=256"));
        }
        if !(tol > 0.0) {
            return Err("tolerance must be positive".into());
        }
        let spec = ScenarioSpec::by_name(scenario).map_err(|e| e.to_string())?.with_grid(n, n);
        let (state, params) = spec.initial_state().map_err(|e| e.to_string())?;
        Ok(Self {
            op: RhsOperator::new(MhdRhs::new(&state, params)),
            dt: initial_dt(&state, &params),
            state,
            params,
            t: 0.0,
            tol,
            controller: ControllerState::new(ControllerMode::Combined),
            policy: SpectralPolicy::default(),
            spectral: None,
            accepted: 0,
            rejected: 0,
            rhs_evals: 0,
        })
    }

    /// Takes one accepted step, retrying with smaller steps as needed; returns the new time.
    pub fn advance_step(&mut self) -> Result<f64, String> {
        let calls = self.op.calls();
        let lin = FrozenLinearization::new(&self.op, &self.state.data);
        let est = estimate_alpha(&lin, self.spectral.as_ref(), &self.policy, (self.accepted + self.rejected) as u64);
        let engine = PhiEngine::leja(&est);
        self.spectral = Some(est);
        let p = SchemeId::Exprb43.embedded_order().unwrap_or(3);
        for _ in 0..MAX_RETRIES {
            let res = step(SchemeId::Exprb43, &lin, self.dt, engine, self.tol);
            let err = res.error_estimate;
            let usable = res.converged && err.is_finite();
            if usable && accept(err, self.tol) {
                let candidate = self.state.with_data(res.new_state);
                if candidate.validate(&self.params).is_ok() {
                    self.t += self.dt;
                    self.dt = self.controller.after_accept(self.dt, err, self.tol, p, res.rhs_calls as f64);
                    self.state = candidate;
                    self.accepted += 1;
                    self.rhs_evals += self.op.calls() - calls;
                    return Ok(self.t);
                }
            }
            self.rejected += 1;
            self.dt = if usable && !accept(err, self.tol) {
                self.controller.after_reject(self.dt, err, self.tol, p)
            } else {
                0.5 * self.dt
            };
        }
        self.rhs_evals += self.op.calls() - calls;
        Err(format!("{MAX_RETRIES} consecutive rejected steps at t = {}", self.t))
    }

    /// One plane of the conserved state, row-major with x fastest.
    pub fn field_plane(&self, name: &str) -> Result<Vec<f64>, String> {
        let f = field::NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| format!("unknown field '{name}'"))?;
        Ok(self.state.plane(f).to_vec())
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, n: usize, tol: f64) -> Result<Simulation, JsError> {
        Self::create(scenario, n, tol).map_err(|e| JsError::new(&e))
    }

    pub fn advance(&mut self) -> Result<f64, JsError> {
        self.advance_step().map_err(|e| JsError::new(&e))
    }

    pub fn field(&self, name: &str) -> Result<Vec<f64>, JsError> {
        self.field_plane(name).map_err(|e| JsError::new(&e))
    }

    pub fn max_div_b(&self) -> f64 {
        max_abs_div_b(&self.state, &self.params)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Step size the controller proposes next.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn alpha(&self) -> f64 {
        self.spectral.as_ref().map_or(0.0, |s| s.alpha)
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn rhs_evals(&self) -> usize {
        self.rhs_evals
    }

    pub fn nx(&self) -> usize {
        self.state.nx
    }

    pub fn ny(&self) -> usize {
        self.state.ny
    }

    /// Physical width over height, for drawing.
    pub fn aspect(&self) -> f64 {
        (self.state.nx as f64 * self.state.dx) / (self.state.ny as f64 * self.state.dy)
    }
}
