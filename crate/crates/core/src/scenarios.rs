//! Initial conditions and case presets for the Kelvin–Helmholtz and reconnection runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mhd::{Boundary, MhdParams, StateGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Khi,
    Reconnection,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Khi => "khi",
            Problem::Reconnection => "recon",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "khi" | "kelvin-helmholtz" => Ok(Problem::Khi),
            "recon" | "reconnection" => Ok(Problem::Reconnection),
            _ => Err(Error::Config(format!("unknown problem '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    Custom,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::IV => "IV",
            CaseId::V => "V",
            CaseId::VI => "VI",
            CaseId::Custom => "custom",
        }
    }

    pub fn problem(self) -> Option<Problem> {
        match self {
            CaseId::I | CaseId::II | CaseId::III | CaseId::IV => Some(Problem::Khi),
            CaseId::V | CaseId::VI => Some(Problem::Reconnection),
            CaseId::Custom => None,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(CaseId::I),
            "II" | "2" => Ok(CaseId::II),
            "III" | "3" => Ok(CaseId::III),
            "IV" | "4" => Ok(CaseId::IV),
            "V" | "5" => Ok(CaseId::V),
            "VI" | "6" => Ok(CaseId::VI),
            "CUSTOM" => Ok(CaseId::Custom),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

/// Shear-layer constants.
pub mod khi {
    pub const V0: f64 = 1.0;
    pub const XI: f64 = 0.1;
    pub const EPS_X: f64 = 0.1;
    pub const EPS_Y: f64 = 0.1;
    pub const OMEGA_X: f64 = 2.0;
    pub const OMEGA_Y: f64 = 2.0;
    pub const LX: f64 = 2.5;
    pub const LY: f64 = 1.0;
    pub const RHO: f64 = 1.0;
    pub const P: f64 = 0.25;
    pub const B: [f64; 3] = [0.1, 0.0, 10.0];
}

/// Current-sheet constants. X and Y are the domain half-widths.
pub mod recon {
    pub const PSI0: f64 = 0.1;
    pub const X: f64 = 12.8;
    pub const Y: f64 = 6.4;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub problem: Problem,
    pub case_id: CaseId,
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub params: MhdParams,
    pub tol: f64,
}

impl ScenarioSpec {
    pub fn preset(case_id: CaseId) -> Result<Self> {
        let khi_params = |mu, eta, kappa| MhdParams {
            mu,
            eta,
            kappa,
            ..Default::default()
        };
        let recon_params = MhdParams {
            mu: 5e-2,
            eta: 5e-3,
            kappa: 4e-2,
            bc_x: Boundary::Periodic,
            bc_y: Boundary::Reflecting,
            ..Default::default()
        };
        let (n, t_final, params) = match case_id {
            CaseId::I => (512, 1.0, khi_params(0.25, 1e-2, 1e-4)),
            CaseId::II => (800, 0.3, khi_params(0.25, 1e-2, 1e-4)),
            CaseId::III => (128, 2.0, khi_params(1e-4, 1e-4, 1e-4)),
            CaseId::IV => (256, 1.0, khi_params(1e-4, 1e-4, 1e-4)),
            CaseId::V => (256, 20.0, recon_params),
            CaseId::VI => (128, 100.0, recon_params),
            CaseId::Custom => return Err(Error::UnknownCase("custom has no preset".into())),
        };
        let problem = case_id.problem().expect("preset case");
        let (x_range, y_range) = match problem {
            Problem::Khi => ((-0.5 * khi::LX, 0.5 * khi::LX), (-0.5 * khi::LY, 0.5 * khi::LY)),
            Problem::Reconnection => ((-recon::X, recon::X), (-recon::Y, recon::Y)),
        };
        Ok(Self {
            problem,
            case_id,
            nx: n,
            ny: n,
            t_final,
            x_range,
            y_range,
            params,
            tol: 1e-4,
        })
    }

    /// Looks up "khi-I" … "khi-IV", "recon-V", "recon-VI".
    pub fn by_name(name: &str) -> Result<Self> {
        let (prob, case) = name
            .split_once('-')
            .ok_or_else(|| Error::UnknownCase(name.to_string()))?;
        let problem: Problem = prob.parse().map_err(|_| Error::UnknownCase(name.to_string()))?;
        let case_id: CaseId = case.parse()?;
        if case_id.problem() != Some(problem) {
            return Err(Error::UnknownCase(name.to_string()));
        }
        Self::preset(case_id)
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.problem, self.case_id)
    }

    pub fn with_grid(mut self, nx: usize, ny: usize) -> Self {
        self.nx = nx;
        self.ny = ny;
        self
    }

    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn initial_state(&self) -> Result<(StateGrid, MhdParams)> {
        match self.problem {
            Problem::Khi => init_khi(self),
            Problem::Reconnection => init_reconnection(self),
        }
    }
}

/// Shear flow plus single-mode perturbation.
pub fn khi_velocity(x: f64, y: f64) -> f64 {
    use khi::*;
    let pert = EPS_X * (2.0 * PI * OMEGA_X * x / LX).cos() + EPS_Y * (PI * (2.0 * OMEGA_Y - 1.0) * y / LY).sin();
    V0 * (y / XI).tanh() + pert
}

pub fn init_khi(spec: &ScenarioSpec) -> Result<(StateGrid, MhdParams)> {
    if spec.problem != Problem::Khi || !matches!(spec.case_id, CaseId::I | CaseId::II | CaseId::III | CaseId::IV | CaseId::Custom) {
        return Err(Error::UnknownCase(spec.name()));
    }
    let params = spec.params;
    let mut u = StateGrid::zeros(spec.nx, spec.ny, spec.x_range, spec.y_range);
    for j in 0..spec.ny {
        let y = u.y_center(j);
        for i in 0..spec.nx {
            let x = u.x_center(i);
            u.set_primitive(&params, i, j, khi::RHO, [khi_velocity(x, y), 0.0, 0.0], khi::B, khi::P);
        }
    }
    Ok((u, params))
}

/// Harris-like current sheet with an X-point perturbation; v = 0.
pub fn reconnection_field(x: f64, y: f64, psi0: f64) -> [f64; 3] {
    let kx = PI / recon::X;
    let ky = PI / (2.0 * recon::Y);
    [
        (2.0 * y).tanh() - psi0 * ky * (kx * x).cos() * (ky * y).sin(),
        psi0 * kx * (kx * x).sin() * (ky * y).cos(),
        0.0,
    ]
}

pub fn init_reconnection(spec: &ScenarioSpec) -> Result<(StateGrid, MhdParams)> {
    init_reconnection_with(spec, recon::PSI0)
}

/// [`init_reconnection`] with a custom perturbation amplitude.
pub fn init_reconnection_with(spec: &ScenarioSpec, psi0: f64) -> Result<(StateGrid, MhdParams)> {
    if spec.problem != Problem::Reconnection || !matches!(spec.case_id, CaseId::V | CaseId::VI | CaseId::Custom) {
        return Err(Error::UnknownCase(spec.name()));
    }
    let params = spec.params;
    let mut u = StateGrid::zeros(spec.nx, spec.ny, spec.x_range, spec.y_range);
    for j in 0..spec.ny {
        let y = u.y_center(j);
        let rho = 1.2 - (2.0 * y).tanh().powi(2);
        for i in 0..spec.nx {
            let x = u.x_center(i);
            u.set_primitive(&params, i, j, rho, [0.0; 3], reconnection_field(x, y, psi0), 0.5 * rho);
        }
    }
    Ok((u, params))
}
