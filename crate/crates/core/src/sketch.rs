//! Streaming low-rank sketches of a row-streamed matrix `A`.
//!
//! [`SketchState`] keeps a `2k × m` buffer. Rows are appended until the
//! buffer is full; the buffer is then compressed to at most `k` rows by an
//! SVD, a score-driven choice of `k` directions, and a shrink of every kept
//! singular value by the smallest kept one (`s² → s² − δ²`). Half of the
//! removed energy is accumulated into a ridge term, so that
//! `AᵀA ≈ BᵀB + λ′·I`.
//!
//! With [`ScoreKind::Magnitude`] this is Robust Frequent Directions. With
//! [`ScoreKind::Covariance`] the kept directions are those with the largest
//! `d²/(d² + λ)²`, i.e. the largest eigenvalues of the ridge-regularised
//! parameter covariance, which is what prediction intervals depend on.

use std::io::{Read, Write};

use crate::codec;
use crate::error::{Error, Result};
use crate::linalg::{thin_svd, Matrix};

/// Retention priority of a singular value during compression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreKind {
    /// Keep the largest singular values (Robust Frequent Directions).
    Magnitude,
    /// Keep the largest `d² / (d² + λ)²`.
    Covariance { lambda: f64 },
}

impl ScoreKind {
    pub fn covariance(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain {
                what: "score lambda",
                value: lambda,
            });
        }
        Ok(ScoreKind::Covariance { lambda })
    }

    pub fn score(&self, d: f64) -> f64 {
        match *self {
            ScoreKind::Magnitude => d,
            ScoreKind::Covariance { lambda } => {
                let d2 = d * d;
                if d2 == 0.0 {
                    return 0.0;
                }
                let den = d2 + lambda;
                d2 / (den * den)
            }
        }
    }
}

/// Outcome of one buffer compression, kept for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    /// singular values of the full buffer, non-increasing
    pub spectrum: Vec<f64>,
    /// indices into `spectrum` that were retained, in retention order
    pub selected: Vec<usize>,
    pub delta: f64,
}

/// Streaming state: buffer, fill level and accumulated shift.
#[derive(Debug, Clone)]
pub struct SketchState {
    k: usize,
    m: usize,
    buf: Matrix,
    fill: usize,
    lambda_acc: f64,
    score: ScoreKind,
    n_rows: usize,
    last: Option<Compression>,
    compressions: usize,
}

impl SketchState {
    pub fn new(k: usize, m: usize, score: ScoreKind) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("sketch rank k must be at least 1".into()));
        }
        if m == 0 {
            return Err(Error::Config("sketch row width must be at least 1".into()));
        }
        if let ScoreKind::Covariance { lambda } = score {
            ScoreKind::covariance(lambda)?;
        }
        Ok(Self {
            k,
            m,
            buf: Matrix::zeros(2 * k, m),
            fill: 0,
            lambda_acc: 0.0,
            score,
            n_rows: 0,
            last: None,
            compressions: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn fill(&self) -> usize {
        self.fill
    }

    pub fn lambda_acc(&self) -> f64 {
        self.lambda_acc
    }

    pub fn rows_consumed(&self) -> usize {
        self.n_rows
    }

    pub fn compressions(&self) -> usize {
        self.compressions
    }

    pub fn buffer(&self) -> &Matrix {
        &self.buf
    }

    pub fn score_kind(&self) -> ScoreKind {
        self.score
    }

    pub fn last_compression(&self) -> Option<&Compression> {
        self.last.as_ref()
    }

    /// Appends one row, compressing when the buffer becomes full.
    pub fn update(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: row.len(),
            });
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: self.n_rows, col });
        }
        self.buf.row_mut(self.fill).copy_from_slice(row);
        self.fill += 1;
        self.n_rows += 1;
        if self.fill == 2 * self.k {
            self.compress()?;
        }
        Ok(())
    }

    /// Picks the `k` retained spectrum indices and the shrink `δ`.
    fn select(&self, d: &[f64]) -> (Vec<usize>, f64) {
        if d.len() <= self.k {
            // every direction fits: nothing has to be discarded, so no shrink
            return ((0..d.len()).collect(), 0.0);
        }
        let scores: Vec<f64> = d.iter().map(|&s| self.score.score(s)).collect();
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(d[b].total_cmp(&d[a]))
                .then(a.cmp(&b))
        });
        order.truncate(self.k);
        let delta = order.iter().map(|&j| d[j]).fold(f64::INFINITY, f64::min);
        (order, delta)
    }

    fn compress(&mut self) -> Result<()> {
        let svd = thin_svd(&self.buf)?;
        let (selected, delta) = self.select(&svd.d);
        let delta2 = delta * delta;
        let mut kept: Vec<(f64, usize)> = selected
            .iter()
            .map(|&j| ((svd.d[j] * svd.d[j] - delta2).max(0.0).sqrt(), j))
            .collect();
        kept.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        self.buf.as_mut_slice().fill(0.0);
        let mut fill = 0;
        for &(s, j) in kept.iter().filter(|(s, _)| *s > 0.0) {
            let row = self.buf.row_mut(fill);
            for (c, r) in row.iter_mut().enumerate() {
                *r = s * svd.v[(c, j)];
            }
            fill += 1;
        }
        self.fill = fill;
        self.lambda_acc += 0.5 * delta2;
        self.compressions += 1;
        self.last = Some(Compression {
            spectrum: svd.d,
            selected,
            delta,
        });
        Ok(())
    }

    /// Finishes the stream and returns the rank-`k` factors.
    ///
    /// A buffer holding more than `k` rows is compressed once first, so rows
    /// that arrived after the last compression are not silently dropped.
    pub fn finalize(mut self) -> Result<SketchResult> {
        if self.n_rows == 0 {
            return Err(Error::EmptyStream);
        }
        if self.fill > self.k {
            self.compress()?;
        }
        let top = self.buf.top_rows(self.k);
        let svd = thin_svd(&top)?;
        Ok(SketchResult {
            d: svd.d,
            v: svd.v,
            lambda_n: self.lambda_acc,
            n_rows: self.n_rows,
        })
    }
}

/// Final sketch: `AᵀA ≈ V·diag(d²)·Vᵀ + λ_n·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchResult {
    /// min(k, m) singular values, non-increasing
    pub d: Vec<f64>,
    /// m × min(k, m), orthonormal columns
    pub v: Matrix,
    pub lambda_n: f64,
    pub n_rows: usize,
}

const SKETCH_MAGIC: &[u8; 4] = b"RIDS";
const SKETCH_VERSION: u32 = 1;

impl SketchResult {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn width(&self) -> usize {
        self.v.rows()
    }

    /// Dense `V·diag(d²)·Vᵀ + λ_n·I`; only sensible for small widths.
    pub fn approx_gram(&self) -> Matrix {
        let mut vd = self.v.clone();
        let d2: Vec<f64> = self.d.iter().map(|d| d * d).collect();
        vd.scale_cols(&d2);
        let mut g = vd.matmul_tr(&self.v);
        g.add_diag(self.lambda_n);
        g
    }

    /// Writes the `RIDS` container.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(SKETCH_MAGIC)?;
        codec::put_u32(w, SKETCH_VERSION)?;
        codec::put_u64(w, self.rank() as u64)?;
        codec::put_u64(w, self.width() as u64)?;
        codec::put_u64(w, self.n_rows as u64)?;
        codec::put_f64(w, self.lambda_n)?;
        codec::put_f64s(w, &self.d)?;
        codec::put_f64s(w, self.v.as_slice())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        const CTX: &str = "sketch container";
        let version = codec::expect_magic(r, SKETCH_MAGIC, CTX)?;
        if version != SKETCH_VERSION {
            return Err(Error::Format {
                context: CTX,
                reason: format!("unsupported version {version}"),
            });
        }
        let k = codec::get_len(r, CTX)?;
        let m = codec::get_len(r, CTX)?;
        let n_rows = codec::get_len(r, CTX)?;
        let lambda_n = codec::get_f64(r, CTX)?;
        let d = codec::get_f64s(r, k, CTX)?;
        let v = codec::get_f64s(r, m * k, CTX)?;
        codec::expect_eof(r, CTX)?;
        Ok(Self {
            d,
            v: Matrix::from_vec(m, k, v)?,
            lambda_n,
            n_rows,
        })
    }
}

/// Folds `update` over every row, then `finalize`.
pub fn sketch_stream<I, R>(rows: I, k: usize, score: ScoreKind) -> Result<SketchResult>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut rows = rows.into_iter();
    let first = rows.next().ok_or(Error::EmptyStream)?;
    let mut state = SketchState::new(k, first.as_ref().len(), score)?;
    state.update(first.as_ref())?;
    for row in rows {
        state.update(row.as_ref())?;
    }
    state.finalize()
}
