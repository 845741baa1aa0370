//! 2.5D resistive MHD on a uniform cell-centered grid.
//!
//! Eight conserved fields (ρ, ρv, B, E) depend on x and y only; velocity and magnetic
//! field keep all three components. All derivatives are 3-point centered differences.

mod bc;
mod checkpoint;
mod rhs;

pub use bc::{apply_bc, fill_ghosts, GhostedState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use rhs::{mhd_rhs, mhd_rhs_into, MhdRhs};

use crate::error::{Error, Result};

pub const NVAR: usize = 8;

/// Field indices in [`StateGrid::data`].
pub mod field {
    pub const RHO: usize = 0;
    pub const MX: usize = 1;
    pub const MY: usize = 2;
    pub const MZ: usize = 3;
    pub const BX: usize = 4;
    pub const BY: usize = 5;
    pub const BZ: usize = 6;
    pub const EN: usize = 7;

    pub const NAMES: [&str; 8] = ["rho", "mx", "my", "mz", "bx", "by", "bz", "en"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhdParams {
    /// Viscosity, the inverse Reynolds number.
    pub mu: f64,
    /// Resistivity, the inverse Lundquist number.
    pub eta: f64,
    /// Thermal conductivity, the inverse Prandtl number.
    pub kappa: f64,
    pub gamma: f64,
    pub mu0: f64,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
}

impl Default for MhdParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            eta: 0.0,
            kappa: 0.0,
            gamma: 5.0 / 3.0,
            mu0: 1.0,
            bc_x: Boundary::Periodic,
            bc_y: Boundary::Periodic,
        }
    }
}

/// Conserved variables on an nx × ny grid.
///
/// Memory layout is field-major: eight contiguous planes, each row-major with x fastest,
/// so `data[f * nx * ny + j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x_min: f64,
    pub y_min: f64,
    pub data: Vec<f64>,
}

impl StateGrid {
    pub fn zeros(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            nx,
            ny,
            dx: (x_range.1 - x_range.0) / nx as f64,
            dy: (y_range.1 - y_range.0) / ny as f64,
            x_min: x_range.0,
            y_min: y_range.0,
            data: vec![0.0; NVAR * nx * ny],
        }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, f: usize, i: usize, j: usize) -> usize {
        f * self.nx * self.ny + j * self.nx + i
    }

    #[inline]
    pub fn get(&self, f: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(f, i, j)]
    }

    #[inline]
    pub fn set(&mut self, f: usize, i: usize, j: usize, v: f64) {
        let k = self.idx(f, i, j);
        self.data[k] = v;
    }

    pub fn plane(&self, f: usize) -> &[f64] {
        let n = self.cells();
        &self.data[f * n..(f + 1) * n]
    }

    /// Cell-center x coordinate; written as a single rounded ratio so that grids refined
    /// by an odd factor share their cell centers bit for bit.
    pub fn x_center(&self, i: usize) -> f64 {
        let width = self.dx * self.nx as f64;
        self.x_min + width * ((2 * i + 1) as f64 / (2 * self.nx) as f64)
    }

    pub fn y_center(&self, j: usize) -> f64 {
        let height = self.dy * self.ny as f64;
        self.y_min + height * ((2 * j + 1) as f64 / (2 * self.ny) as f64)
    }

    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self { data, ..self.clone() }
    }

    /// Gas pressure from the total energy.
    pub fn pressure(&self, params: &MhdParams, i: usize, j: usize) -> f64 {
        use field::*;
        let rho = self.get(RHO, i, j);
        let m2 = self.get(MX, i, j).powi(2) + self.get(MY, i, j).powi(2) + self.get(MZ, i, j).powi(2);
        let b2 = self.get(BX, i, j).powi(2) + self.get(BY, i, j).powi(2) + self.get(BZ, i, j).powi(2);
        (params.gamma - 1.0) * (self.get(EN, i, j) - 0.5 * m2 / rho - 0.5 * b2 / params.mu0)
    }

    /// Sets all conserved variables of one cell from primitive values.
    #[allow(clippy::too_many_arguments)]
    pub fn set_primitive(&mut self, params: &MhdParams, i: usize, j: usize, rho: f64, v: [f64; 3], b: [f64; 3], p: f64) {
        use field::*;
        let v2 = v.iter().map(|x| x * x).sum::<f64>();
        let b2 = b.iter().map(|x| x * x).sum::<f64>();
        self.set(RHO, i, j, rho);
        self.set(MX, i, j, rho * v[0]);
        self.set(MY, i, j, rho * v[1]);
        self.set(MZ, i, j, rho * v[2]);
        self.set(BX, i, j, b[0]);
        self.set(BY, i, j, b[1]);
        self.set(BZ, i, j, b[2]);
        self.set(EN, i, j, p / (params.gamma - 1.0) + 0.5 * rho * v2 + 0.5 * b2 / params.mu0);
    }

    /// Checks positivity of density and pressure and finiteness of every value.
    pub fn validate(&self, params: &MhdParams) -> Result<()> {
        for f in 0..NVAR {
            for j in 0..self.ny {
                for i in 0..self.nx {
                    if !self.get(f, i, j).is_finite() {
                        return Err(Error::NonFinite { field: f, i, j });
                    }
                }
            }
        }
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.get(field::RHO, i, j) <= 0.0 || self.pressure(params, i, j) <= 0.0 {
                    return Err(Error::NonFinite { field: field::RHO, i, j });
                }
            }
        }
        Ok(())
    }

    /// Largest fast magnetosonic speed plus flow speed, for the initial step guess.
    pub fn max_wave_speed(&self, params: &MhdParams) -> f64 {
        use field::*;
        let mut best = 0.0f64;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let rho = self.get(RHO, i, j);
                let v = [self.get(MX, i, j) / rho, self.get(MY, i, j) / rho, self.get(MZ, i, j) / rho];
                let b2 = self.get(BX, i, j).powi(2) + self.get(BY, i, j).powi(2) + self.get(BZ, i, j).powi(2);
                let p = self.pressure(params, i, j).max(0.0);
                let cf = ((params.gamma * p + b2 / params.mu0) / rho).sqrt();
                let speed = v.iter().map(|x| x * x).sum::<f64>().sqrt() + cf;
                best = best.max(speed);
            }
        }
        best
    }
}

/// Discrete divergence of (Bx, By) at every cell, using the 3-point centered stencil
/// with ghost values taken from the boundary conditions.
pub fn discrete_div_b(u: &StateGrid, params: &MhdParams) -> Vec<f64> {
    let g = apply_bc(u, params);
    let mut out = vec![0.0; u.cells()];
    for j in 0..u.ny as isize {
        for i in 0..u.nx as isize {
            let dbx = (g.get(field::BX, i + 1, j) - g.get(field::BX, i - 1, j)) / (2.0 * u.dx);
            let dby = (g.get(field::BY, i, j + 1) - g.get(field::BY, i, j - 1)) / (2.0 * u.dy);
            out[j as usize * u.nx + i as usize] = dbx + dby;
        }
    }
    out
}

pub fn max_abs_div_b(u: &StateGrid, params: &MhdParams) -> f64 {
    discrete_div_b(u, params).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Domain integrals (cell sum times cell area) of each conserved field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedTotals {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub magnetic: [f64; 3],
    pub energy: f64,
}

pub fn conserved_totals(u: &StateGrid) -> ConservedTotals {
    let area = u.dx * u.dy;
    let total = |f: usize| u.plane(f).iter().sum::<f64>() * area;
    ConservedTotals {
        mass: total(field::RHO),
        momentum: [total(field::MX), total(field::MY), total(field::MZ)],
        magnetic: [total(field::BX), total(field::BY), total(field::BZ)],
        energy: total(field::EN),
    }
}
