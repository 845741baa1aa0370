use super::{field, Boundary, MhdParams, StateGrid, NVAR};

/// Conserved fields padded with `layers` ghost cells on every side.
#[derive(Debug, Clone)]
pub struct GhostedState {
    pub nx: usize,
    pub ny: usize,
    pub layers: usize,
    pub data: Vec<f64>,
}

impl GhostedState {
    pub fn width(&self) -> usize {
        self.nx + 2 * self.layers
    }

    pub fn height(&self) -> usize {
        self.ny + 2 * self.layers
    }

    /// Value at interior coordinates (i, j); ghost cells have negative or ≥ n indices.
    #[inline]
    pub fn get(&self, f: usize, i: isize, j: isize) -> f64 {
        let g = self.layers as isize;
        let w = self.width();
        let plane = w * self.height();
        self.data[f * plane + (j + g) as usize * w + (i + g) as usize]
    }
}

/// Sign a field picks up when mirrored across a wall normal to x (`normal_x`) or y.
/// Wall-normal velocity and wall-normal magnetic field are odd; everything else is even.
pub(crate) fn parity(f: usize, normal_x: bool) -> f64 {
    match (f, normal_x) {
        (field::MX, true) | (field::BX, true) | (field::MY, false) | (field::BY, false) => -1.0,
        _ => 1.0,
    }
}

#[inline]
fn source_index(k: isize, n: usize, bc: Boundary) -> (usize, f64) {
    let n = n as isize;
    if (0..n).contains(&k) {
        return (k as usize, 1.0);
    }
    match bc {
        Boundary::Periodic => (k.rem_euclid(n) as usize, 1.0),
        // mirror about the cell face: −1 ↔ 0, −2 ↔ 1, n ↔ n−1, …
        Boundary::Reflecting => {
            let m = if k < 0 { -k - 1 } else { 2 * n - k - 1 };
            (m.clamp(0, n - 1) as usize, -1.0)
        }
    }
}

/// Pads one row-major plane with ghost layers. `sign_x` / `sign_y` apply to values
/// reflected across x- or y-walls.
#[allow(clippy::too_many_arguments)]
pub fn fill_ghosts(
    plane: &[f64],
    nx: usize,
    ny: usize,
    layers: usize,
    bc_x: Boundary,
    bc_y: Boundary,
    sign_x: f64,
    sign_y: f64,
    out: &mut [f64],
) {
    let g = layers as isize;
    let w = nx + 2 * layers;
    for jp in 0..(ny + 2 * layers) {
        let (sj, fy) = source_index(jp as isize - g, ny, bc_y);
        let sy = if fy < 0.0 { sign_y } else { 1.0 };
        let row = &plane[sj * nx..(sj + 1) * nx];
        let dst = &mut out[jp * w..(jp + 1) * w];
        for (ip, d) in dst.iter_mut().enumerate() {
            let (si, fx) = source_index(ip as isize - g, nx, bc_x);
            let sx = if fx < 0.0 { sign_x } else { 1.0 };
            *d = sx * sy * row[si];
        }
    }
}

pub(crate) fn ghosted(u: &StateGrid, params: &MhdParams, layers: usize) -> GhostedState {
    let w = u.nx + 2 * layers;
    let h = u.ny + 2 * layers;
    let mut data = vec![0.0; NVAR * w * h];
    for f in 0..NVAR {
        fill_ghosts(
            u.plane(f),
            u.nx,
            u.ny,
            layers,
            params.bc_x,
            params.bc_y,
            parity(f, true),
            parity(f, false),
            &mut data[f * w * h..(f + 1) * w * h],
        );
    }
    GhostedState {
        nx: u.nx,
        ny: u.ny,
        layers,
        data,
    }
}

/// One ghost layer per side, filled according to the boundary conditions.
pub fn apply_bc(u: &StateGrid, params: &MhdParams) -> GhostedState {
    ghosted(u, params, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(nx: usize, ny: usize) -> StateGrid {
        let mut u = StateGrid::zeros(nx, ny, (0.0, 1.0), (0.0, 1.0));
        for (k, v) in u.data.iter_mut().enumerate() {
            *v = k as f64 + 1.0;
        }
        u
    }

    #[test]
    fn periodic_wraps() {
        let u = numbered(4, 4);
        let g = apply_bc(&u, &MhdParams::default());
        for f in 0..NVAR {
            for j in 0..4 {
                assert_eq!(g.get(f, -1, j), u.get(f, 3, j as usize));
                assert_eq!(g.get(f, 4, j), u.get(f, 0, j as usize));
                assert_eq!(g.get(f, j, -1), u.get(f, j as usize, 3));
            }
        }
    }

    #[test]
    fn reflecting_wall_parity() {
        let params = MhdParams {
            bc_y: Boundary::Reflecting,
            ..Default::default()
        };
        let mut u = numbered(4, 3);
        u.set(field::MY, 2, 0, 0.7);
        let g = apply_bc(&u, &params);
        assert_eq!(g.get(field::MY, 2, -1), -0.7);
        assert_eq!(g.get(field::RHO, 1, -1), u.get(field::RHO, 1, 0));
        assert_eq!(g.get(field::EN, 1, 3), u.get(field::EN, 1, 2));
        assert_eq!(g.get(field::BY, 1, 3), -u.get(field::BY, 1, 2));
        assert_eq!(g.get(field::BX, 1, 3), u.get(field::BX, 1, 2));
        assert_eq!(g.get(field::MX, 1, -1), u.get(field::MX, 1, 0));
        // x stays periodic
        assert_eq!(g.get(field::MY, -1, 1), u.get(field::MY, 3, 1));
    }

    #[test]
    fn two_layer_mirror() {
        let params = MhdParams {
            bc_x: Boundary::Reflecting,
            bc_y: Boundary::Reflecting,
            ..Default::default()
        };
        let u = numbered(3, 3);
        let g = ghosted(&u, &params, 2);
        assert_eq!(g.get(field::RHO, -2, 0), u.get(field::RHO, 1, 0));
        assert_eq!(g.get(field::MX, 4, 1), -u.get(field::MX, 1, 1));
        assert_eq!(g.get(field::MX, -1, -1), -u.get(field::MX, 0, 0));
        assert_eq!(g.get(field::BY, -1, -1), -u.get(field::BY, 0, 0));
        assert_eq!(g.get(field::RHO, -1, -1), u.get(field::RHO, 0, 0));
    }
}
