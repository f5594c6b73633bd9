use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{load_csv, Dataset, LoadReport};
use crate::error::{Error, Result};

/// One named dataset: a CSV file and its target column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub target: String,
}

/// Line-oriented `name.key = value` file mapping short dataset names to
/// files. Relative paths resolve against the manifest's directory. Blank
/// lines and lines starting with `#` are ignored.
///
/// ```text
/// wine.path = winequality-red.csv
/// wine.target = quality
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut paths: BTreeMap<String, PathBuf> = BTreeMap::new();
        let mut targets: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: &str| Error::Config(format!("manifest line {}: {why}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `name.key = value`"))?;
            let (name, field) = key
                .trim()
                .rsplit_once('.')
                .ok_or_else(|| bad("key must be `name.path` or `name.target`"))?;
            let (name, value) = (name.trim().to_string(), value.trim());
            if name.is_empty() || value.is_empty() {
                return Err(bad("empty name or value"));
            }
            match field.trim() {
                "path" => {
                    let p = Path::new(value);
                    let p = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
                    paths.insert(name, p);
                }
                "target" => {
                    targets.insert(name, value.to_string());
                }
                other => return Err(bad(&format!("unknown field `{other}`"))),
            }
        }
        let mut entries = BTreeMap::new();
        for (name, path) in paths {
            let target = targets
                .remove(&name)
                .ok_or_else(|| Error::Config(format!("manifest entry `{name}` has no target")))?;
            entries.insert(name, ManifestEntry { path, target });
        }
        if let Some(name) = targets.keys().next() {
            return Err(Error::Config(format!("manifest entry `{name}` has no path")));
        }
        Ok(Self { entries })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<&ManifestEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Config(format!("dataset `{name}` is not in the manifest")))
    }

    pub fn load_dataset(&self, name: &str) -> Result<(Dataset, LoadReport)> {
        let e = self.get(name)?;
        load_csv(&e.path, &e.target)
    }
}
