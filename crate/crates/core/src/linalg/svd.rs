use faer::{Mat, Side};

use super::matrix::{norm2, Matrix};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are clamped to zero.
pub const CLAMP_RTOL: f64 = 1e-12;

/// Thin SVD `a = u · diag(d) · vᵀ` with `r = min(rows, cols)` factors.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// rows × r
    pub u: Matrix,
    /// r singular values, non-increasing, all ≥ 0
    pub d: Vec<f64>,
    /// cols × r, orthonormal columns
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        us.scale_cols(&self.d);
        us.matmul_tr(&self.v)
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// eigenvectors as columns
    pub vectors: Matrix,
}

pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.cols(),
        });
    }
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let fm = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let evd = fm.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| s.read(i)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        // faer does not surface its sweep count; report the matrix order instead
        return Err(Error::NoConvergence { iterations: n });
    }
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| u.read(i, order[j]));
    Ok(SymEigen { values, vectors })
}

/// Thin QR `a = q · r` of a matrix with rows ≥ cols.
fn thin_qr(a_rows: usize, a_cols: usize, at: impl Fn(usize, usize) -> f64) -> (Matrix, Matrix) {
    let fm = Mat::<f64>::from_fn(a_rows, a_cols, at);
    let qr = fm.qr();
    let q = qr.compute_thin_q();
    let r = qr.compute_thin_r();
    (
        Matrix::from_fn(a_rows, a_cols, |i, j| q.read(i, j)),
        Matrix::from_fn(a_cols, a_cols, |i, j| r.read(i, j)),
    )
}

/// Thin SVD of an arbitrary finite matrix.
///
/// The smaller dimension is reduced first by a Householder QR, then the
/// resulting square factor is diagonalised through the eigendecomposition of
/// its (small) Gram matrix. Right singular vectors come out of an orthogonal
/// eigenvector basis rather than from `Bᵀu/d`, so they stay orthonormal even
/// when the spectrum spans many orders of magnitude.
pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    if let Some(pos) = a.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / a.cols().max(1),
            col: pos % a.cols().max(1),
        });
    }
    let (rows, cols) = a.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(rows, 0),
            d: Vec::new(),
            v: Matrix::zeros(cols, 0),
        });
    }
    if rows <= cols {
        // aᵀ = q·rf  ⇒  a = sq · qᵀ with sq = rfᵀ (rows × rows)
        let (q, rf) = thin_qr(cols, rows, |i, j| a[(j, i)]);
        let sq = rf.transpose();
        let (u, d, w) = square_svd(&sq)?;
        Ok(ThinSvd { u, d, v: q.matmul(&w) })
    } else {
        // a = q·rf, rf is cols × cols
        let (q, rf) = thin_qr(rows, cols, |i, j| a[(i, j)]);
        let (us, d, w) = square_svd(&rf)?;
        Ok(ThinSvd {
            u: q.matmul(&us),
            d,
            v: w,
        })
    }
}

/// SVD of a small square matrix `s = u · diag(d) · wᵀ` via `eig(sᵀs)`.
///
/// `u` is the orthonormal factor of a QR of `s·w`, whose columns are
/// orthogonal with norms `d`; this keeps `u` orthonormal even where `d` is
/// tiny and `s·w / d` would be dominated by rounding.
fn square_svd(s: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let n = s.rows();
    let eig = sym_eigen(&s.gram_cols())?;
    // ‖s·w_j‖ is accurate to rounding of the largest value, sqrt of the
    // Gram eigenvalue only to its square root
    let sw0 = s.matmul(&eig.vectors);
    let norms: Vec<f64> = (0..n).map(|j| norm2(&sw0.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let w = eig.vectors.select_cols(&order);
    let sw = sw0.select_cols(&order);
    let mut d: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let dmax = d.first().copied().unwrap_or(0.0);
    for v in &mut d {
        if *v <= CLAMP_RTOL * dmax {
            *v = 0.0;
        }
    }
    let (mut u, r) = thin_qr(n, n, |i, j| sw[(i, j)]);
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                u[(i, j)] = -u[(i, j)];
            }
        }
    }
    Ok((u, d, w))
}
