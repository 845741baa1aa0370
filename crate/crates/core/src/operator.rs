use nalgebra::DMatrix;

/// A linear map on flat `f64` vectors, applied matrix-free.
pub trait LinearOperator {
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl<F> LinearOperator for F
where
    F: Fn(&[f64], &mut [f64]),
{
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self(x, out)
    }
}

/// Wraps an assembled matrix as an operator. Used by tests and oracles.
pub struct DenseOperator<'a>(pub &'a DMatrix<f64>);

impl LinearOperator for DenseOperator<'_> {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.0;
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
        }
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
