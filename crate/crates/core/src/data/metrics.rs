use crate::delta::IntervalReport;
use crate::error::{Error, Result};

/// Interval quality on a test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// fraction of responses inside their interval
    pub p_cov: f64,
    /// Pearson correlation between interval width and absolute error
    pub r: f64,
    /// set when either series has zero variance; `r` is then 0
    pub r_degenerate: bool,
    /// mean interval width over the training target sd
    pub w_sd: f64,
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.len() < 2 || flat(a) || flat(b) {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn flat(v: &[f64]) -> bool {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    hi - lo <= 1e-12 * lo.abs().max(hi.abs())
}

/// Metrics for intervals and responses in the same (original) units.
pub fn metrics(reports: &[IntervalReport], y_true: &[f64], target_sd_train: f64) -> Result<Metrics> {
    if reports.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: reports.len(),
            actual: y_true.len(),
        });
    }
    if reports.is_empty() {
        return Err(Error::Data("no test points".into()));
    }
    if !(target_sd_train > 0.0) {
        return Err(Error::Domain {
            what: "target sd",
            value: target_sd_train,
        });
    }
    let n = reports.len() as f64;
    let covered = reports.iter().zip(y_true).filter(|(r, &y)| r.contains(y)).count();
    let widths: Vec<f64> = reports.iter().map(IntervalReport::width).collect();
    let errs: Vec<f64> = reports.iter().zip(y_true).map(|(r, y)| (y - r.center).abs()).collect();
    let r = pearson(&widths, &errs);
    Ok(Metrics {
        p_cov: covered as f64 / n,
        r: r.unwrap_or(0.0),
        r_degenerate: r.is_none(),
        w_sd: widths.iter().sum::<f64>() / n / target_sd_train,
    })
}
