//! Tabular regression data: CSV loading, z-scoring, repeated splits and
//! interval quality metrics.

mod manifest;
mod metrics;
mod split;

use std::fs::File;
use std::io::Read;
use std::path::Path;

pub use manifest::{Manifest, ManifestEntry};
pub use metrics::{metrics, pearson, Metrics};
pub(crate) use split::mix as split_mix;
pub use split::{Split, SplitSpec};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

/// Rows skipped while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, feature_names: Vec<String>, target_name: &str) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if feature_names.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                actual: feature_names.len(),
            });
        }
        Ok(Self {
            x,
            y,
            feature_names,
            target_name: target_name.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Rows `idx`, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Matrix::zeros(idx.len(), self.x.cols());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).copy_from_slice(self.x.row(i));
        }
        Dataset {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, target)
}

/// Parses a comma-separated table with a header row. Every column other than
/// `target` becomes a feature. Rows with a cell that does not parse as a
/// finite number are dropped and counted.
pub fn read_csv(input: impl Read, target: &str) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Data("empty file".into()));
    }
    let t = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != t)
        .map(|(_, h)| h.clone())
        .collect();

    let mut xs = Vec::new();
    let mut y = Vec::new();
    let mut report = LoadReport::default();
    let mut row = Vec::with_capacity(headers.len());
    for rec in rdr.records() {
        let rec = rec?;
        row.clear();
        let mut ok = true;
        for cell in rec.iter() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            report.dropped_rows += 1;
            continue;
        }
        for (i, &v) in row.iter().enumerate() {
            if i == t {
                y.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(Error::Data("no numeric rows".into()));
    }
    let x = Matrix::from_vec(y.len(), feature_names.len(), xs)?;
    let ds = Dataset::new(x, y, feature_names, target)?;
    for (j, name) in ds.feature_names.iter().enumerate() {
        if is_constant(ds.x.col(j).iter().copied()) {
            return Err(Error::ConstantColumn(name.clone()));
        }
    }
    if is_constant(ds.y.iter().copied()) {
        return Err(Error::ConstantColumn(ds.target_name.clone()));
    }
    Ok((ds, report))
}

fn is_constant(mut it: impl Iterator<Item = f64>) -> bool {
    match it.next() {
        Some(first) => it.all(|v| v == first),
        None => true,
    }
}

/// Population mean and standard deviation.
fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Training-split statistics used to z-score features and target.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

impl StandardizationStats {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("cannot standardize an empty dataset".into()));
        }
        let mut x_mean = Vec::with_capacity(train.n_features());
        let mut x_sd = Vec::with_capacity(train.n_features());
        for j in 0..train.n_features() {
            let col = train.x.col(j);
            let (m, s) = mean_sd(col.iter().copied());
            if !(s > 0.0) {
                return Err(Error::ConstantColumn(train.feature_names[j].clone()));
            }
            x_mean.push(m);
            x_sd.push(s);
        }
        let (y_mean, y_sd) = mean_sd(train.y.iter().copied());
        if !(y_sd > 0.0) {
            return Err(Error::ConstantColumn(train.target_name.clone()));
        }
        Ok(Self {
            x_mean,
            x_sd,
            y_mean,
            y_sd,
        })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.x_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x_mean.len(),
                actual: ds.n_features(),
            });
        }
        let mut out = ds.clone();
        for i in 0..out.len() {
            for ((v, m), s) in out.x.row_mut(i).iter_mut().zip(&self.x_mean).zip(&self.x_sd) {
                *v = (*v - m) / s;
            }
        }
        for v in &mut out.y {
            *v = (*v - self.y_mean) / self.y_sd;
        }
        Ok(out)
    }

    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.x_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x_mean.len(),
                actual: ds.n_features(),
            });
        }
        let mut out = ds.clone();
        for i in 0..out.len() {
            for ((v, m), s) in out.x.row_mut(i).iter_mut().zip(&self.x_mean).zip(&self.x_sd) {
                *v = *v * s + m;
            }
        }
        for v in &mut out.y {
            *v = self.y_to_original(*v);
        }
        Ok(out)
    }

    pub fn y_to_original(&self, v: f64) -> f64 {
        v * self.y_sd + self.y_mean
    }

    /// Maps an interval on the standardized target back to original units.
    pub fn interval_to_original(&self, r: &crate::delta::IntervalReport) -> crate::delta::IntervalReport {
        crate::delta::IntervalReport::new(self.y_to_original(r.center), r.half_width * self.y_sd, r.alpha)
    }
}

/// Fits statistics on `train` and applies them to `apply_to`.
pub fn standardize(train: &Dataset, apply_to: &Dataset) -> Result<(Dataset, StandardizationStats)> {
    let stats = StandardizationStats::fit(train)?;
    Ok((stats.apply(apply_to)?, stats))
}
