use faer::linalg::solvers::{Cholesky as FaerCholesky, SpSolver};
use faer::{Col, Mat, Side};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Cholesky factorisation of a symmetric positive definite matrix.
pub struct Cholesky {
    inner: FaerCholesky<f64>,
    n: usize,
}

impl Cholesky {
    /// Fails with [`Error::Singular`] when `a` is not numerically positive definite.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: a.cols(),
            });
        }
        let fm = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
        let inner = fm.cholesky(Side::Lower).map_err(|_| Error::Singular)?;
        Ok(Self { inner, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "cholesky rhs length");
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.inner.solve(&rhs);
        (0..self.n).map(|i| x.read(i)).collect()
    }
}
