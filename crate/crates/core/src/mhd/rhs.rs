use rayon::prelude::*;

use super::bc::{fill_ghosts, parity};
use super::{field, MhdParams, StateGrid, NVAR};
use crate::error::{Error, Result};
use crate::linearization::Rhs;

const GHOST: usize = 2;
const NFLUX: usize = 2 * NVAR;

struct Primitives {
    rho: Vec<f64>,
    v: [Vec<f64>; 3],
    b: [Vec<f64>; 3],
    en: Vec<f64>,
    ptot: Vec<f64>,
    temp: Vec<f64>,
    b2half: Vec<f64>,
}

fn primitives(padded: &[f64], cells: usize, params: &MhdParams) -> Primitives {
    let plane = |f: usize| &padded[f * cells..(f + 1) * cells];
    let rho = plane(field::RHO).to_vec();
    let v = [field::MX, field::MY, field::MZ].map(|f| plane(f).iter().zip(&rho).map(|(m, r)| m / r).collect::<Vec<_>>());
    let b = [field::BX, field::BY, field::BZ].map(|f| plane(f).to_vec());
    let en = plane(field::EN).to_vec();
    let mut ptot = vec![0.0; cells];
    let mut temp = vec![0.0; cells];
    let mut b2half = vec![0.0; cells];
    for k in 0..cells {
        let v2 = v[0][k] * v[0][k] + v[1][k] * v[1][k] + v[2][k] * v[2][k];
        let bh = 0.5 * (b[0][k] * b[0][k] + b[1][k] * b[1][k] + b[2][k] * b[2][k]) / params.mu0;
        let p = (params.gamma - 1.0) * (en[k] - 0.5 * rho[k] * v2 - bh);
        ptot[k] = p + bh;
        temp[k] = p / rho[k];
        b2half[k] = bh;
    }
    Primitives {
        rho,
        v,
        b,
        en,
        ptot,
        temp,
        b2half,
    }
}

/// Net flux (ideal minus diffusive) in x and y of all eight variables at padded cell `k`.
#[inline]
fn cell_flux(pr: &Primitives, params: &MhdParams, k: usize, w: usize, inv2dx: f64, inv2dy: f64, out: &mut [f64]) {
    let rho = pr.rho[k];
    let [vx, vy, vz] = [pr.v[0][k], pr.v[1][k], pr.v[2][k]];
    let [bx, by, bz] = [pr.b[0][k], pr.b[1][k], pr.b[2][k]];
    let pt = pr.ptot[k];
    let imu0 = 1.0 / params.mu0;
    let bv = bx * vx + by * vy + bz * vz;
    let eh = pr.en[k] + pt;

    let (fx, fy) = out.split_at_mut(NVAR);
    fx[field::RHO] = rho * vx;
    fx[field::MX] = rho * vx * vx + pt - bx * bx * imu0;
    fx[field::MY] = rho * vx * vy - bx * by * imu0;
    fx[field::MZ] = rho * vx * vz - bx * bz * imu0;
    fx[field::BX] = 0.0;
    fx[field::BY] = vx * by - bx * vy;
    fx[field::BZ] = vx * bz - bx * vz;
    fx[field::EN] = eh * vx - bx * bv * imu0;

    fy[field::RHO] = rho * vy;
    fy[field::MX] = rho * vy * vx - by * bx * imu0;
    fy[field::MY] = rho * vy * vy + pt - by * by * imu0;
    fy[field::MZ] = rho * vy * vz - by * bz * imu0;
    fy[field::BX] = vy * bx - by * vx;
    fy[field::BY] = 0.0;
    fy[field::BZ] = vy * bz - by * vz;
    fy[field::EN] = eh * vy - by * bv * imu0;

    if params.mu == 0.0 && params.eta == 0.0 && params.kappa == 0.0 {
        return;
    }
    let ddx = |a: &[f64]| (a[k + 1] - a[k - 1]) * inv2dx;
    let ddy = |a: &[f64]| (a[k + w] - a[k - w]) * inv2dy;
    let (dvx_dx, dvx_dy) = (ddx(&pr.v[0]), ddy(&pr.v[0]));
    let (dvy_dx, dvy_dy) = (ddx(&pr.v[1]), ddy(&pr.v[1]));
    let (dvz_dx, dvz_dy) = (ddx(&pr.v[2]), ddy(&pr.v[2]));
    let (dbx_dx, dbx_dy) = (ddx(&pr.b[0]), ddy(&pr.b[0]));
    let (dby_dx, dby_dy) = (ddx(&pr.b[1]), ddy(&pr.b[1]));
    let (dbz_dx, dbz_dy) = (ddx(&pr.b[2]), ddy(&pr.b[2]));
    let (dt_dx, dt_dy) = (ddx(&pr.temp), ddy(&pr.temp));
    let (db2_dx, db2_dy) = (ddx(&pr.b2half), ddy(&pr.b2half));

    let div_v = dvx_dx + dvy_dy;
    let txx = 2.0 * dvx_dx - 2.0 / 3.0 * div_v;
    let tyy = 2.0 * dvy_dy - 2.0 / 3.0 * div_v;
    let txy = dvx_dy + dvy_dx;
    let txz = dvz_dx;
    let tyz = dvz_dy;
    let (mu, eta) = (params.mu, params.eta);
    let heat = mu * params.kappa * params.gamma / (params.gamma - 1.0);

    // x-direction diffusive fluxes
    let curl_z = dby_dx - dbx_dy;
    fx[field::MX] -= mu * txx;
    fx[field::MY] -= mu * txy;
    fx[field::MZ] -= mu * txz;
    fx[field::BY] -= eta * curl_z;
    fx[field::BZ] -= eta * dbz_dx;
    fx[field::EN] -= mu * (txx * vx + txy * vy + txz * vz)
        + heat * dt_dx
        + eta * (db2_dx - (bx * dbx_dx + by * dbx_dy));

    // y-direction
    fy[field::MX] -= mu * txy;
    fy[field::MY] -= mu * tyy;
    fy[field::MZ] -= mu * tyz;
    fy[field::BX] += eta * curl_z;
    fy[field::BZ] -= eta * dbz_dy;
    fy[field::EN] -= mu * (txy * vx + tyy * vy + tyz * vz)
        + heat * dt_dy
        + eta * (db2_dy - (bx * dby_dx + by * dby_dy));
}

/// Writes ∂U/∂t for the flat conserved vector `data` laid out like [`StateGrid::data`].
pub fn mhd_rhs_into(geom: &StateGrid, data: &[f64], params: &MhdParams, out: &mut [f64]) {
    let (nx, ny) = (geom.nx, geom.ny);
    let w = nx + 2 * GHOST;
    let h = ny + 2 * GHOST;
    let cells = w * h;
    let mut padded = vec![0.0; NVAR * cells];
    for f in 0..NVAR {
        fill_ghosts(
            &data[f * nx * ny..(f + 1) * nx * ny],
            nx,
            ny,
            GHOST,
            params.bc_x,
            params.bc_y,
            parity(f, true),
            parity(f, false),
            &mut padded[f * cells..(f + 1) * cells],
        );
    }
    let pr = primitives(&padded, cells, params);
    let inv2dx = 0.5 / geom.dx;
    let inv2dy = 0.5 / geom.dy;

    // Fluxes on the interior plus one ring, interleaved per cell.
    let mut flux = vec![0.0; cells * NFLUX];
    flux.par_chunks_mut(w * NFLUX)
        .enumerate()
        .filter(|(jp, _)| *jp >= 1 && *jp < h - 1)
        .for_each(|(jp, row)| {
            for ip in 1..w - 1 {
                let k = jp * w + ip;
                cell_flux(&pr, params, k, w, inv2dx, inv2dy, &mut row[ip * NFLUX..(ip + 1) * NFLUX]);
            }
        });

    let n = nx * ny;
    for j in 0..ny {
        for i in 0..nx {
            let k = (j + GHOST) * w + i + GHOST;
            let east = &flux[(k + 1) * NFLUX..];
            let west = &flux[(k - 1) * NFLUX..];
            let north = &flux[(k + w) * NFLUX..];
            let south = &flux[(k - w) * NFLUX..];
            for f in 0..NVAR {
                out[f * n + j * nx + i] = -(east[f] - west[f]) * inv2dx - (north[NVAR + f] - south[NVAR + f]) * inv2dy;
            }
        }
    }
}

/// ∂U/∂t of the semi-discrete system. Fails on the first non-finite output cell.
pub fn mhd_rhs(u: &StateGrid, params: &MhdParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; u.data.len()];
    mhd_rhs_into(u, &u.data, params, &mut out);
    let n = u.cells();
    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        let (f, c) = (k / n, k % n);
        return Err(Error::NonFinite {
            field: f,
            i: c % u.nx,
            j: c / u.nx,
        });
    }
    Ok(out)
}

/// Grid geometry and coefficients bundled as an [`Rhs`].
#[derive(Debug, Clone)]
pub struct MhdRhs {
    pub geometry: StateGrid,
    pub params: MhdParams,
}

impl MhdRhs {
    pub fn new(u: &StateGrid, params: MhdParams) -> Self {
        Self {
            geometry: StateGrid {
                data: Vec::new(),
                ..u.clone()
            },
            params,
        }
    }
}

impl Rhs for MhdRhs {
    fn dim(&self) -> usize {
        NVAR * self.geometry.nx * self.geometry.ny
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        mhd_rhs_into(&self.geometry, u, &self.params, out);
    }
}
