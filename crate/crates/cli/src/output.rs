use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use crate::config::RunConfig;

pub type Table = csv::Writer<BufWriter<File>>;

/// Opens `path` and writes two `#` metadata lines (version and config hash,
/// then the resolved settings), one `#` line per note, then the header row.
pub fn table(path: &Path, cfg: &RunConfig, command: &str, notes: &[String], header: &[&str]) -> Result<Table> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "# deltasketch {} command={command} config_sha256={}",
        env!("CARGO_PKG_VERSION"),
        cfg.hash()
    )?;
    writeln!(w, "# config {}", cfg.canonical().trim_end().replace('\n', " "))?;
    for n in notes {
        writeln!(w, "# {}", n.replace('\n', " "))?;
    }
    let mut t = csv::Writer::from_writer(w);
    t.write_record(header)?;
    Ok(t)
}

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NA".into()
    }
}

pub fn seconds(cfg: &RunConfig, v: f64) -> String {
    if cfg.timing {
        num(v)
    } else {
        "NA".into()
    }
}

/// Mean over finite values; NaN when there are none.
pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}
