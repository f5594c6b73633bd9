//! Low-rank parameter covariance from a sketch, and delta-method intervals.
//!
//! With the sketch `JᵀJ ≈ V·D²·Vᵀ + λ_n·I` and training penalty `λ`, the
//! inverse covariance `(JᵀJ + λI)⁻¹ JᵀJ (JᵀJ + λI)⁻¹` restricted to the
//! retained directions is `V·diag((d² + λ_n)/(d² + λ_n + λ)²)·Vᵀ`. The
//! interval at `x₀` is `ŷ₀ ± t(1 − α/2; n − p*)·ŝ·sqrt(1 + g₀ᵀ Σ⁻¹ g₀)`.

use std::io::{Read, Write};

use crate::codec;
use crate::error::{Error, Result};
use crate::linalg::{dot, t_quantile, Matrix};
use crate::nn::Mlp;
use crate::sketch::SketchResult;

/// Prediction interval at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalReport {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
    pub alpha: f64,
}

impl IntervalReport {
    pub fn new(center: f64, half_width: f64, alpha: f64) -> Self {
        Self {
            center,
            lower: center - half_width,
            upper: center + half_width,
            half_width,
            alpha,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
        });
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    Ok(())
}

/// `ŝ` from residuals and a real-valued parameter count.
pub(crate) fn noise_scale(residuals: &[f64], p_star: f64) -> Result<f64> {
    let n = residuals.len();
    let dof = n as f64 - p_star;
    if !(dof > 0.0) {
        return Err(Error::DegreesOfFreedom { n, p_star });
    }
    Ok((dot(residuals, residuals) / dof).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CovarianceOptions {
    /// Also account for the directions outside the sketch subspace, where the
    /// sketch approximates `JᵀJ` by `λ_n·I`.
    pub complement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    v: Matrix,
    d: Vec<f64>,
    lambda_n: f64,
    lambda: f64,
    d_sigma_inv: Vec<f64>,
    complement: bool,
    /// coefficient of `‖(I − VVᵀ)g‖²` when `complement` is on
    c_perp: f64,
    p_star: f64,
    s_hat: f64,
    n_train: usize,
}

/// `h = (d² + λ_n)/(d² + λ_n + λ)` and `(d² + λ_n)/(d² + λ_n + λ)²`.
fn diag_terms(d: f64, lambda_n: f64, lambda: f64) -> (f64, f64) {
    let num = d * d + lambda_n;
    let den = num + lambda;
    (num / den, num / (den * den))
}

/// Builds the covariance model. `residuals` are `y_i − ŷ_i` over the same
/// training rows that were streamed into the sketch.
pub fn build_covariance(
    sk: &SketchResult,
    lambda: f64,
    residuals: &[f64],
    opts: CovarianceOptions,
) -> Result<CovarianceModel> {
    check_lambda(lambda)?;
    if residuals.len() != sk.n_rows {
        return Err(Error::DimensionMismatch {
            expected: sk.n_rows,
            actual: residuals.len(),
        });
    }
    let (m, r) = (sk.width(), sk.rank());
    let lambda_n = sk.lambda_n;
    if lambda + lambda_n == 0.0 {
        if let Some(index) = sk.d.iter().position(|&d| d == 0.0) {
            return Err(Error::SingularCovariance { index });
        }
        if opts.complement && m > r {
            return Err(Error::SingularCovariance { index: r });
        }
    }

    let mut p_star = 0.0;
    let mut d_sigma_inv = Vec::with_capacity(r);
    for &d in &sk.d {
        let (h, dsi) = diag_terms(d, lambda_n, lambda);
        p_star += 2.0 * h - h * h;
        d_sigma_inv.push(dsi);
    }
    let mut c_perp = 0.0;
    if opts.complement && m > r {
        let (hc, c) = diag_terms(0.0, lambda_n, lambda);
        p_star += (m - r) as f64 * (2.0 * hc - hc * hc);
        c_perp = c;
    }
    let s_hat = noise_scale(residuals, p_star)?;

    Ok(CovarianceModel {
        v: sk.v.clone(),
        d: sk.d.clone(),
        lambda_n,
        lambda,
        d_sigma_inv,
        complement: opts.complement,
        c_perp,
        p_star,
        s_hat,
        n_train: residuals.len(),
    })
}

impl CovarianceModel {
    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d_sigma_inv(&self) -> &[f64] {
        &self.d_sigma_inv
    }

    pub fn complement(&self) -> bool {
        self.complement
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn s_hat(&self) -> f64 {
        self.s_hat
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn width(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn dof(&self) -> f64 {
        self.n_train as f64 - self.p_star
    }

    /// `t(1 − α/2; n − p*)`.
    pub fn t_multiplier(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        t_quantile(1.0 - 0.5 * alpha, self.dof())
    }

    /// `g₀ᵀ Σ⁻¹ g₀` under the model.
    pub fn quad_form(&self, g0: &[f64]) -> Result<f64> {
        if g0.len() != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: g0.len(),
            });
        }
        let proj = self.v.tr_matvec(g0);
        let mut q: f64 = proj.iter().zip(&self.d_sigma_inv).map(|(p, w)| w * p * p).sum();
        if self.complement && self.c_perp > 0.0 {
            let back = self.v.matvec(&proj);
            let perp: f64 = g0.iter().zip(&back).map(|(g, b)| (g - b) * (g - b)).sum();
            q += self.c_perp * perp;
        }
        Ok(q.max(0.0))
    }

    pub fn interval_from_gradient(&self, center: f64, g0: &[f64], t: f64, alpha: f64) -> Result<IntervalReport> {
        let q = self.quad_form(g0)?;
        Ok(IntervalReport::new(center, t * self.s_hat * (1.0 + q).sqrt(), alpha))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(COV_MAGIC)?;
        codec::put_u32(w, COV_VERSION)?;
        codec::put_u64(w, self.width() as u64)?;
        codec::put_u64(w, self.rank() as u64)?;
        codec::put_f64(w, self.lambda)?;
        codec::put_f64(w, self.lambda_n)?;
        codec::put_f64(w, self.p_star)?;
        codec::put_f64(w, self.s_hat)?;
        codec::put_u64(w, self.n_train as u64)?;
        codec::put_u32(w, u32::from(self.complement))?;
        codec::put_f64s(w, &self.d)?;
        codec::put_f64s(w, &self.d_sigma_inv)?;
        codec::put_f64s(w, self.v.as_slice())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        const CTX: &str = "covariance container";
        let version = codec::expect_magic(r, COV_MAGIC, CTX)?;
        if version != COV_VERSION {
            return Err(Error::Format {
                context: CTX,
                reason: format!("unsupported version {version}"),
            });
        }
        let m = codec::get_len(r, CTX)?;
        let k = codec::get_len(r, CTX)?;
        let lambda = codec::get_f64(r, CTX)?;
        let lambda_n = codec::get_f64(r, CTX)?;
        let p_star = codec::get_f64(r, CTX)?;
        let s_hat = codec::get_f64(r, CTX)?;
        let n_train = codec::get_len(r, CTX)?;
        let flags = codec::get_u32(r, CTX)?;
        if flags > 1 {
            return Err(Error::Format {
                context: CTX,
                reason: format!("unknown flags {flags:#x}"),
            });
        }
        let d = codec::get_f64s(r, k, CTX)?;
        let d_sigma_inv = codec::get_f64s(r, k, CTX)?;
        let v = Matrix::from_vec(m, k, codec::get_f64s(r, m * k, CTX)?)?;
        codec::expect_eof(r, CTX)?;
        let complement = flags & 1 == 1;
        let c_perp = if complement && m > k {
            diag_terms(0.0, lambda_n, lambda).1
        } else {
            0.0
        };
        Ok(Self {
            v,
            d,
            lambda_n,
            lambda,
            d_sigma_inv,
            complement,
            c_perp,
            p_star,
            s_hat,
            n_train,
        })
    }
}

const COV_MAGIC: &[u8; 4] = b"CVMD";
const COV_VERSION: u32 = 1;

pub fn quad_form(model: &CovarianceModel, g0: &[f64]) -> Result<f64> {
    model.quad_form(g0)
}

pub fn predict_interval(net: &Mlp, model: &CovarianceModel, x0: &[f64], alpha: f64) -> Result<IntervalReport> {
    let t = model.t_multiplier(alpha)?;
    let (center, g) = net.value_and_gradient(x0)?;
    model.interval_from_gradient(center, &g, t, alpha)
}

/// Intervals for every row of `x`, sharing one t quantile.
pub fn predict_intervals(net: &Mlp, model: &CovarianceModel, x: &Matrix, alpha: f64) -> Result<Vec<IntervalReport>> {
    let t = model.t_multiplier(alpha)?;
    x.row_iter()
        .map(|r| {
            let (center, g) = net.value_and_gradient(r)?;
            model.interval_from_gradient(center, &g, t, alpha)
        })
        .collect()
}
