//! The φ functions: φ₀(z) = eᶻ and φₗ₊₁(z) = (φₗ(z) − 1/l!)/z.
//!
//! Everything here is dense and small-scale. These routines serve as the reference the
//! iterative engines are checked against, and as the inner kernel of the Krylov engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this modulus the recursion from eᶻ cancels catastrophically and the
/// Taylor series is used instead.
pub const TAYLOR_SWITCH: f64 = 0.5;

/// Largest dense matrix accepted by [`phi_dense`] and [`divided_differences`].
pub const DENSE_LIMIT: usize = 512;

const TAYLOR_DEGREE: usize = 30;
const TAYLOR_RADIUS: f64 = 2.0;

/// Index l of φₗ, restricted to 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhiOrder(u8);

impl PhiOrder {
    pub const MAX: usize = 4;

    pub fn new(l: usize) -> Result<Self> {
        if l > Self::MAX {
            return Err(Error::PhiOrder(l));
        }
        Ok(Self(l as u8))
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// φₗ(0) = 1/l!.
    pub fn value_at_zero(self) -> f64 {
        1.0 / factorial(self.get())
    }
}

impl TryFrom<usize> for PhiOrder {
    type Error = Error;

    fn try_from(l: usize) -> Result<Self> {
        Self::new(l)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// φₗ(z) for real z.
pub fn phi_scalar(l: PhiOrder, z: f64) -> f64 {
    let l = l.get();
    if z.abs() < TAYLOR_SWITCH {
        let mut term = 1.0 / factorial(l);
        let mut sum = term;
        for k in 1..64 {
            term *= z / (k + l) as f64;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let mut phi = z.exp();
        for k in 0..l {
            phi = (phi - 1.0 / factorial(k)) / z;
        }
        phi
    }
}

/// φₗ(z) for complex z.
pub fn phi_scalar_complex(l: PhiOrder, z: Complex64) -> Complex64 {
    let l = l.get();
    if z.norm() < TAYLOR_SWITCH {
        let mut term = Complex64::new(1.0 / factorial(l), 0.0);
        let mut sum = term;
        for k in 1..64 {
            term *= z / (k + l) as f64;
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let mut phi = z.exp();
        for k in 0..l {
            phi = (phi - 1.0 / factorial(k)) / z;
        }
        phi
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a degree-30 Taylor polynomial.
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = norm1(m);
    let s = if norm > TAYLOR_RADIUS {
        (norm / TAYLOR_RADIUS).log2().ceil() as i32
    } else {
        0
    };
    let x = m * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    // Horner: I + X/1 (I + X/2 (I + ... (I + X/30)))
    let mut r = &id + &x / TAYLOR_DEGREE as f64;
    for k in (1..TAYLOR_DEGREE).rev() {
        r = &id + (&x * &r) / k as f64;
    }
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() > DENSE_LIMIT {
        return Err(Error::TooLarge(a.nrows()));
    }
    Ok(a.nrows())
}

/// φₗ(A) for a dense square matrix.
///
/// Built as the top-right block of exp(Â) with
/// Â = [[A, I, 0, …], [0, 0, I, …], …, [0, …, 0]] of size n(l+1).
pub fn phi_dense(l: PhiOrder, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    let l = l.get();
    if l == 0 {
        return Ok(expm(a));
    }
    let big = n * (l + 1);
    let mut aug = DMatrix::<f64>::zeros(big, big);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    for k in 0..l {
        for i in 0..n {
            aug[(k * n + i, (k + 1) * n + i)] = 1.0;
        }
    }
    let e = expm(&aug);
    Ok(e.view((0, l * n), (n, n)).into_owned())
}

/// φₗ(A)·b through the (n+l)-sized augmentation
/// [[A, b, 0], [0, 0, I_{l−1}], [0, 0, 0]].
pub fn phi_dense_action(l: PhiOrder, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = check_square(a)?;
    if b.len() != n {
        return Err(Error::LengthMismatch(b.len(), n));
    }
    let l = l.get();
    if l == 0 {
        return Ok(expm(a) * b);
    }
    let big = n + l;
    let mut aug = DMatrix::<f64>::zeros(big, big);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, 1)).copy_from(b);
    for k in 0..l - 1 {
        aug[(n + k, n + k + 1)] = 1.0;
    }
    let e = expm(&aug);
    Ok(e.view((0, big - 1), (n, 1)).column(0).into_owned())
}

/// Newton-form coefficients of φₗ at a node sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDiffTable {
    pub nodes: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub order: PhiOrder,
}

impl DividedDiffTable {
    /// Evaluates Σₘ dₘ ∏_{j<m} (x − nodes[j]).
    pub fn newton_eval(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut prod = 1.0;
        for (d, node) in self.coeffs.iter().zip(&self.nodes) {
            sum += d * prod;
            prod *= x - node;
        }
        sum
    }
}

/// Divided differences φₗ[x₀], φₗ[x₀, x₁], … of φₗ at `nodes`.
///
/// They are read off the first column of φₗ(Z), where Z is lower bidiagonal with the
/// nodes on the diagonal and ones below it. This stays accurate for long node
/// sequences where the recursive difference table does not.
pub fn divided_differences(l: PhiOrder, nodes: &[f64]) -> Result<DividedDiffTable> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodes);
    }
    let n = nodes.len();
    let mut z = DMatrix::<f64>::zeros(n, n);
    for (i, &x) in nodes.iter().enumerate() {
        z[(i, i)] = x;
        if i > 0 {
            z[(i, i - 1)] = 1.0;
        }
    }
    let f = phi_dense(l, &z)?;
    Ok(DividedDiffTable {
        nodes: nodes.to_vec(),
        coeffs: f.column(0).iter().copied().collect(),
        order: l,
    })
}
