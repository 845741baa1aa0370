//! Arnoldi projection baseline for φₗ(J·dt)·v.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::leja::PhiApplyResult;
use crate::operator::{dot, norm2, LinearOperator};
use crate::phi::{phi_dense_action, PhiOrder};

pub const DEFAULT_M_MAX: usize = 100;
pub const M_MAX_LIMIT: usize = 200;

/// Orthonormal basis V_{m+1} and the (m+1)×m Hessenberg matrix of an Arnoldi run.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub vectors: Vec<Vec<f64>>,
    pub hessenberg: DMatrix<f64>,
    pub m: usize,
}

impl KrylovBasis {
    fn new(v: &[f64], m_max: usize) -> Self {
        let beta = norm2(v);
        Self {
            vectors: vec![v.iter().map(|x| x / beta).collect()],
            hessenberg: DMatrix::zeros(m_max + 1, m_max),
            m: 0,
        }
    }

    /// Adds one basis vector with modified Gram–Schmidt plus one reorthogonalization
    /// pass. Returns true on (happy) breakdown, in which case no vector is appended.
    fn expand<A: LinearOperator + ?Sized>(&mut self, op: &A) -> bool {
        let j = self.m;
        let mut w = vec![0.0; self.vectors[0].len()];
        op.apply(&self.vectors[j], &mut w);
        let scale = norm2(&w);
        for _pass in 0..2 {
            for (i, vi) in self.vectors.iter().enumerate() {
                let h = dot(vi, &w);
                self.hessenberg[(i, j)] += h;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= h * vk;
                }
            }
        }
        let h = norm2(&w);
        self.hessenberg[(j + 1, j)] = h;
        self.m += 1;
        if scale == 0.0 || h <= 1e-12 * scale {
            return true;
        }
        self.vectors.push(w.into_iter().map(|x| x / h).collect());
        false
    }

    /// Square upper block H_m.
    pub fn square(&self) -> DMatrix<f64> {
        self.hessenberg.view((0, 0), (self.m, self.m)).into_owned()
    }
}

/// Runs `m` Arnoldi steps from `v` (or fewer on breakdown).
pub fn arnoldi<A: LinearOperator + ?Sized>(op: &A, v: &[f64], m: usize) -> Result<KrylovBasis> {
    if norm2(v) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut basis = KrylovBasis::new(v, m);
    while basis.m < m {
        if basis.expand(op) {
            break;
        }
    }
    Ok(basis)
}

/// Approximates φₗ(J·dt)·v in a growing Krylov space.
///
/// After each expansion φₗ(dt·H_m)·e₁ is evaluated densely; the run stops when
/// ‖v‖·|h_{m+1,m}|·|[φₗ(dt·H_m)e₁]_m|·dt ≤ tol or the space becomes invariant.
pub fn apply_phi_krylov<A: LinearOperator + ?Sized>(
    l: PhiOrder,
    matvec: &A,
    v: &[f64],
    dt: f64,
    tol: f64,
    m_max: usize,
) -> Result<PhiApplyResult> {
    let beta = norm2(v);
    if beta == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m_max = m_max.clamp(1, M_MAX_LIMIT);
    let mut basis = KrylovBasis::new(v, m_max);
    loop {
        let breakdown = basis.expand(matvec);
        let m = basis.m;
        let h = basis.square() * dt;
        let mut e1 = DVector::zeros(m);
        e1[0] = 1.0;
        let coeffs = phi_dense_action(l, &h, &e1)?;
        let h_next = basis.hessenberg[(m, m - 1)];
        let residual = beta * h_next * coeffs[m - 1].abs() * dt;
        let finite = coeffs.iter().all(|c| c.is_finite());
        let converged = finite && (breakdown || residual <= tol);
        if converged || m >= m_max || !finite {
            let mut out = vec![0.0; v.len()];
            for (vk, &ck) in basis.vectors.iter().zip(coeffs.iter()) {
                for (o, x) in out.iter_mut().zip(vk) {
                    *o += beta * ck * x;
                }
            }
            return Ok(PhiApplyResult {
                vector: out,
                iterations: m,
                converged,
                residual: if breakdown { 0.0 } else { residual },
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseOperator;
    use crate::phi::phi_dense;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn order(l: usize) -> PhiOrder {
        PhiOrder::new(l).unwrap()
    }

    #[test]
    fn zero_operator_breaks_down_immediately() {
        let zero = |_: &[f64], out: &mut [f64]| out.fill(0.0);
        let r = apply_phi_krylov(order(1), &zero, &[1.0, 2.0], 0.3, 1e-10, 50).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_relative_eq!(r.vector[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.vector[1], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn diagonal_example() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -10.0]));
        let r = apply_phi_krylov(order(1), &DenseOperator(&a), &[1.0, 1.0], 0.1, 1e-10, 100).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.vector[0], 0.951_625_8, epsilon = 1e-7);
        assert_relative_eq!(r.vector[1], 0.632_120_6, epsilon = 1e-7);
    }

    #[test]
    fn eigenvector_start() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, 0.0, -2.0]);
        let r = apply_phi_krylov(order(0), &DenseOperator(&a), &[3.0, 0.0], 1.0, 1e-12, 10).unwrap();
        assert_eq!(r.iterations, 1);
        assert_relative_eq!(r.vector[0], 3.0 * (-0.5f64).exp(), max_relative = 1e-14);
        assert!(r.vector[1].abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_vector() {
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            apply_phi_krylov(order(1), &DenseOperator(&a), &[0.0, 0.0], 1.0, 1e-8, 10),
            Err(Error::ZeroVector)
        ));
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn arnoldi_relation_and_orthonormality() {
        let a = random_matrix(12, 3);
        let v: Vec<f64> = (0..12).map(|i| (i as f64).sin() + 0.1).collect();
        let basis = arnoldi(&DenseOperator(&a), &v, 8).unwrap();
        let m = basis.m;
        let vm = DMatrix::from_fn(12, m, |i, j| basis.vectors[j][i]);
        let vm1 = DMatrix::from_fn(12, m + 1, |i, j| basis.vectors[j][i]);
        let gram = vm1.transpose() * &vm1;
        assert!((gram - DMatrix::<f64>::identity(m + 1, m + 1)).abs().max() < 1e-10);
        let hbar = basis.hessenberg.view((0, 0), (m + 1, m)).into_owned();
        let lhs = &a * &vm;
        let rhs = vm1 * hbar;
        assert!((&lhs - rhs).norm() <= 1e-8 * lhs.norm());
    }

    #[test]
    fn full_dimension_reproduces_dense_for_symmetric() {
        let r = random_matrix(10, 9);
        let a = (&r + r.transpose()) * 0.5 - DMatrix::<f64>::identity(10, 10) * 2.0;
        let v: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.1).collect();
        // tol = 0 forces the space to grow until it is invariant.
        let res = apply_phi_krylov(order(2), &DenseOperator(&a), &v, 1.0, 0.0, 10).unwrap();
        let want = phi_dense(order(2), &a).unwrap() * DVector::from_vec(v);
        let got = DVector::from_vec(res.vector);
        assert!((got - &want).norm() <= 1e-10 * want.norm());
    }

    #[test]
    fn tighter_tolerance_never_shrinks_basis() {
        let r = random_matrix(30, 5);
        let a = (&r + r.transpose()) * 2.0 - DMatrix::<f64>::identity(30, 30) * 6.0;
        let v = vec![1.0; 30];
        let mut last = 0;
        for tol in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
            let res = apply_phi_krylov(order(1), &DenseOperator(&a), &v, 1.0, tol, 30).unwrap();
            assert!(res.iterations >= last);
            last = res.iterations;
        }
    }
}
