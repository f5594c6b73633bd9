//! Independent reference routines shared by the integration and acceptance
//! tests. Nothing here calls the library's SVD or eigensolver.

#![allow(dead_code, clippy::needless_range_loop)]

use deltasketch::linalg::Matrix;
use deltasketch::nn::Mlp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues in non-increasing order with eigenvectors as columns.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut s: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| s[i][i] * s[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (skp, skq) = (s[k][p], s[k][q]);
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let (spk, sqk) = (s[p][k], s[q][k]);
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[y][y].total_cmp(&s[x][x]));
    let vals = order.iter().map(|&i| s[i][i]).collect();
    let vecs = Matrix::from_fn(n, n, |i, j| v[i][order[j]]);
    (vals, vecs)
}

/// One-sided (Hestenes) Jacobi SVD. Returns the singular values in
/// non-increasing order and the `cols × cols` right singular vectors; only
/// the first `min(rows, cols)` columns are meaningful singular directions.
pub fn jacobi_svd(a: &Matrix) -> (Vec<f64>, Matrix) {
    let (rows, cols) = a.shape();
    // work on the columns of a
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|i| (0..cols).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[p][i], w[q][i]);
                    w[p][i] = c * x - s * y;
                    w[q][i] = s * x + c * y;
                }
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let d = order.iter().map(|&j| norms[j]).collect();
    let vm = Matrix::from_fn(cols, cols, |i, j| v[i][order[j]]);
    (d, vm)
}

/// Plain Robust Frequent Directions with a `2k`-row buffer: when the buffer
/// fills, shrink by the `k`-th singular value and add half its square to the
/// ridge. A buffer whose SVD has at most `k` values is kept exactly. The
/// final sketch is the SVD of the (compressed, if over `k`) first `k` rows.
/// Returns `(d, V·diag(d²)·Vᵀ + λ·I, λ)`.
pub fn rfd_reference(a: &Matrix, k: usize) -> (Vec<f64>, Matrix, f64) {
    let m = a.cols();
    let mut buf: Vec<Vec<f64>> = Vec::new();
    let mut lam = 0.0;
    let compress = |buf: &mut Vec<Vec<f64>>, lam: &mut f64| {
        let b = Matrix::from_rows(buf).unwrap();
        let (d, v) = jacobi_svd(&b);
        let r = b.rows().min(m);
        let delta2 = if r <= k { 0.0 } else { d[k - 1] * d[k - 1] };
        *lam += delta2 / 2.0;
        buf.clear();
        for j in 0..k.min(r) {
            let s = (d[j] * d[j] - delta2).max(0.0).sqrt();
            if s > 0.0 {
                buf.push((0..m).map(|i| s * v[(i, j)]).collect());
            }
        }
    };
    for row in a.row_iter() {
        buf.push(row.to_vec());
        if buf.len() == 2 * k {
            compress(&mut buf, &mut lam);
        }
    }
    if buf.len() > k {
        compress(&mut buf, &mut lam);
    }
    let mut g = Matrix::zeros(m, m);
    for r in &buf {
        for i in 0..m {
            for j in 0..m {
                g.as_mut_slice()[i * m + j] += r[i] * r[j];
            }
        }
    }
    let d = if buf.is_empty() {
        vec![0.0; k.min(m)]
    } else {
        let (mut d, _) = jacobi_svd(&Matrix::from_rows(&buf).unwrap());
        d.truncate(k.min(m));
        d.resize(k.min(m), 0.0);
        d
    };
    g.add_diag(lam);
    (d, g, lam)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(a: &Matrix) -> f64 {
    let (vals, _) = jacobi_eigen(a);
    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Central finite-difference gradient of the network output.
pub fn fd_gradient(net: &Mlp, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.n_params())
        .map(|i| {
            let w = net.params()[i];
            probe.params_mut()[i] = w + h;
            let up = probe.forward(x).unwrap();
            probe.params_mut()[i] = w - h;
            let down = probe.forward(x).unwrap();
            probe.params_mut()[i] = w;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error used by the gradient checks: the difference is scaled by
/// the larger of the two magnitudes, with a floor that keeps coordinates
/// that are essentially zero from dividing by zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting.
pub fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        assert!(piv.abs() > 1e-300, "singular matrix");
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot_row = m[c].clone();
                    for (v, pr) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pr;
                    }
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| m[i][n + j])
}

/// Standard normal quantile by bisection on `erfc`, using the continued
/// fraction-free series/asymptotic `erfc` from Numerical Recipes' `erfcc`.
pub fn normal_quantile(p: f64) -> f64 {
    fn erfc(x: f64) -> f64 {
        let z = x.abs();
        let t = 1.0 / (1.0 + 0.5 * z);
        let r = t
            * (-z * z - 1.265_512_23
                + t * (1.000_023_68
                    + t * (0.374_091_96
                        + t * (0.096_784_18
                            + t * (-0.186_288_06
                                + t * (0.278_868_07
                                    + t * (-1.135_203_98
                                        + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
                .exp();
        if x >= 0.0 {
            r
        } else {
            2.0 - r
        }
    }
    let cdf = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
