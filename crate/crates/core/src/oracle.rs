//! Exact references: the full-Jacobian delta method and the ordinary least
//! squares prediction interval.

use crate::delta::{check_alpha, check_lambda, noise_scale, IntervalReport};
use crate::error::{Error, Result};
use crate::linalg::{dot, t_quantile, thin_svd, Cholesky, Matrix};
use crate::nn::Mlp;

/// Largest parameter count the exact path accepts.
pub const MAX_EXACT_PARAMS: usize = 5000;
/// Largest example count the exact path accepts.
pub const MAX_EXACT_ROWS: usize = 50_000;

/// `Σ⁻¹ = (JᵀJ + λI)⁻¹ JᵀJ (JᵀJ + λI)⁻¹`, kept in factored form
/// `V·diag(w)·Vᵀ` with `w = d²/(d² + λ)²` from the thin SVD of `J`.
#[derive(Debug, Clone)]
pub struct ExactCovariance {
    v: Matrix,
    d: Vec<f64>,
    weights: Vec<f64>,
    lambda: f64,
    p_star: f64,
    s_hat: f64,
    n: usize,
}

impl ExactCovariance {
    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn s_hat(&self) -> f64 {
        self.s_hat
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn width(&self) -> usize {
        self.v.rows()
    }

    /// Singular values of `J`, non-increasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.d
    }

    /// Eigenvalues of `Σ⁻¹` on the row space of `J`, in singular value order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.weights
    }

    /// Dense `p × p` matrix; `O(p²·r)` work.
    pub fn sigma_inv(&self) -> Matrix {
        let mut vw = self.v.clone();
        vw.scale_cols(&self.weights);
        vw.matmul_tr(&self.v)
    }

    pub fn quad_form(&self, g0: &[f64]) -> Result<f64> {
        if g0.len() != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: g0.len(),
            });
        }
        let proj = self.v.tr_matvec(g0);
        Ok(proj
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * p * p)
            .sum::<f64>()
            .max(0.0))
    }

    pub fn t_multiplier(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        t_quantile(1.0 - 0.5 * alpha, self.n as f64 - self.p_star)
    }
}

/// Exact covariance from the full `n × p` Jacobian.
pub fn exact_covariance(j: &Matrix, lambda: f64, residuals: &[f64]) -> Result<ExactCovariance> {
    check_lambda(lambda)?;
    let (n, p) = j.shape();
    if p > MAX_EXACT_PARAMS || n > MAX_EXACT_ROWS {
        return Err(Error::SizeGate { rows: n, params: p });
    }
    if residuals.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: residuals.len(),
        });
    }
    let svd = thin_svd(j)?;
    if lambda == 0.0 && (svd.rank() < p || svd.d.contains(&0.0)) {
        return Err(Error::Singular);
    }
    let mut p_star = 0.0;
    let weights = svd
        .d
        .iter()
        .map(|&d| {
            let d2 = d * d;
            if d2 == 0.0 {
                return 0.0;
            }
            let h = d2 / (d2 + lambda);
            p_star += 2.0 * h - h * h;
            d2 / ((d2 + lambda) * (d2 + lambda))
        })
        .collect();
    let s_hat = noise_scale(residuals, p_star)?;
    Ok(ExactCovariance {
        v: svd.v,
        d: svd.d,
        weights,
        lambda,
        p_star,
        s_hat,
        n,
    })
}

pub fn exact_interval(net: &Mlp, exact: &ExactCovariance, x0: &[f64], alpha: f64) -> Result<IntervalReport> {
    let t = exact.t_multiplier(alpha)?;
    let (center, g) = net.value_and_gradient(x0)?;
    let q = exact.quad_form(&g)?;
    Ok(IntervalReport::new(center, t * exact.s_hat * (1.0 + q).sqrt(), alpha))
}

pub fn exact_intervals(net: &Mlp, exact: &ExactCovariance, x: &Matrix, alpha: f64) -> Result<Vec<IntervalReport>> {
    let t = exact.t_multiplier(alpha)?;
    x.row_iter()
        .map(|r| {
            let (center, g) = net.value_and_gradient(r)?;
            let q = exact.quad_form(&g)?;
            Ok(IntervalReport::new(center, t * exact.s_hat * (1.0 + q).sqrt(), alpha))
        })
        .collect()
}

/// Ordinary least squares fit on a design matrix whose columns already
/// include any intercept.
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub s_hat: f64,
    /// `n − columns`
    pub dof: usize,
    chol: Cholesky,
}

impl OlsFit {
    pub fn new(x: &Matrix, y: &[f64]) -> Result<Self> {
        let (n, c) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        if n <= c {
            return Err(Error::DegreesOfFreedom { n, p_star: c as f64 });
        }
        let sv = thin_svd(x)?.d;
        if sv[c - 1] <= 1e-10 * sv[0] {
            return Err(Error::Singular);
        }
        let chol = Cholesky::new(&x.gram_cols())?;
        let beta = chol.solve(&x.tr_matvec(y));
        let fitted = x.matvec(&beta);
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let dof = n - c;
        let s_hat = (dot(&resid, &resid) / dof as f64).sqrt();
        Ok(Self { beta, s_hat, dof, chol })
    }

    pub fn predict(&self, x0: &[f64]) -> f64 {
        dot(&self.beta, x0)
    }

    /// `ŷ₀ ± t(1 − α/2; n − c)·ŝ·sqrt(1 + x₀ᵀ(XᵀX)⁻¹x₀)`.
    pub fn interval(&self, x0: &[f64], alpha: f64) -> Result<IntervalReport> {
        check_alpha(alpha)?;
        if x0.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                actual: x0.len(),
            });
        }
        let t = t_quantile(1.0 - 0.5 * alpha, self.dof as f64)?;
        let lev = dot(x0, &self.chol.solve(x0)).max(0.0);
        Ok(IntervalReport::new(
            self.predict(x0),
            t * self.s_hat * (1.0 + lev).sqrt(),
            alpha,
        ))
    }
}

/// Classical linear-regression prediction interval. `x_design` carries a
/// leading column of ones and `x0` the matching leading 1.
pub fn linreg_interval(x_design: &Matrix, y: &[f64], x0: &[f64], alpha: f64) -> Result<IntervalReport> {
    OlsFit::new(x_design, y)?.interval(x0, alpha)
}
