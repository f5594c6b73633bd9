//! Run configuration: defaults, then an optional `key = value` file, then
//! command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use deltasketch::data::SplitSpec;
use deltasketch::protocol::{LambdaScale, Method, ProtocolConfig};
use deltasketch::{Activation, Architecture, Error};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Id,
    Exact,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Id => "id",
            MethodKind::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// manifest name, or a CSV path when `target` is set
    pub dataset: String,
    pub target: Option<String>,
    pub manifest: PathBuf,
    pub method: MethodKind,
    pub rank: usize,
    pub ranks: Vec<usize>,
    pub lambda: f64,
    pub lambda_scale: LambdaScale,
    pub alpha: f64,
    pub seed: u64,
    pub repeats: usize,
    pub repeat: usize,
    pub test_fraction: f64,
    /// empty: train for `epochs` without validation
    pub epoch_grid: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub complement: bool,
    pub out: PathBuf,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            target: None,
            manifest: PathBuf::from("data/manifest.txt"),
            method: MethodKind::Id,
            rank: 500,
            ranks: vec![50, 100, 200, 500],
            lambda: 0.01,
            lambda_scale: LambdaScale::PerExample,
            alpha: 0.05,
            seed: 0,
            repeats: 20,
            repeat: 0,
            test_fraction: 0.1,
            epoch_grid: deltasketch::nn::DEFAULT_EPOCH_GRID.to_vec(),
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            hidden: vec![50, 50],
            activation: Activation::Tanh,
            complement: false,
            out: PathBuf::from("out"),
            timing: true,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} = `{value}`: {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, Error> {
    let v = value.trim();
    if v.is_empty() || v == "none" {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Error> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one field from its textual form. Keys are the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "dataset" => self.dataset = value.trim().to_string(),
            "target" => self.target = Some(value.trim().to_string()),
            "manifest" => self.manifest = PathBuf::from(value.trim()),
            "method" => {
                self.method = match value.trim() {
                    "id" => MethodKind::Id,
                    "exact" => MethodKind::Exact,
                    _ => return Err(bad(key, value, "expected id or exact")),
                }
            }
            "rank" => self.rank = parse(key, value)?,
            "ranks" => self.ranks = parse_list(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "lambda-scale" => self.lambda_scale = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            "repeat" => self.repeat = parse(key, value)?,
            "test-fraction" => self.test_fraction = parse(key, value)?,
            "epoch-grid" => self.epoch_grid = parse_list(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch-size" => self.batch_size = parse(key, value)?,
            "learning-rate" => self.learning_rate = parse(key, value)?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "activation" => self.activation = parse(key, value)?,
            "complement" => self.complement = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "timing" => self.timing = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment line.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.dataset.is_empty() {
            return Err(Error::Config("no dataset given (--dataset)".into()));
        }
        if self.rank == 0 || self.ranks.contains(&0) {
            return Err(Error::Config("rank k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: self.alpha,
            });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain {
                what: "lambda",
                value: self.lambda,
            });
        }
        if self.repeats == 0 {
            return Err(Error::Config("at least one repeat is required".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        self.protocol().train.validate()?;
        self.protocol().split.validate()
    }

    pub fn protocol(&self) -> ProtocolConfig {
        let mut p = ProtocolConfig::new(self.lambda, self.lambda_scale);
        p.arch = Architecture::new(&self.hidden, self.activation);
        p.alpha = self.alpha;
        p.split = SplitSpec {
            seed: self.seed,
            test_fraction: self.test_fraction,
            n_repeats: self.repeats,
        };
        p.train.epochs = self.epochs;
        p.train.batch_size = self.batch_size;
        p.train.learning_rate = self.learning_rate;
        p.train.epoch_grid = (!self.epoch_grid.is_empty()).then(|| self.epoch_grid.clone());
        p
    }

    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Id => Method::Id {
                k: self.rank,
                complement: self.complement,
            },
            MethodKind::Exact => Method::Exact,
        }
    }

    /// Every setting that can change results, one `key=value` per line.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset={}", self.dataset);
        let _ = writeln!(s, "target={}", self.target.as_deref().unwrap_or(""));
        let _ = writeln!(s, "method={}", self.method.name());
        let _ = writeln!(s, "rank={}", self.rank);
        let _ = writeln!(s, "ranks={}", join(&self.ranks));
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "lambda-scale={}", self.lambda_scale.name());
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "repeats={}", self.repeats);
        let _ = writeln!(s, "repeat={}", self.repeat);
        let _ = writeln!(s, "test-fraction={}", self.test_fraction);
        let _ = writeln!(s, "epoch-grid={}", join(&self.epoch_grid));
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "batch-size={}", self.batch_size);
        let _ = writeln!(s, "learning-rate={}", self.learning_rate);
        let _ = writeln!(s, "hidden={}", join(&self.hidden));
        let _ = writeln!(s, "activation={}", self.activation.name());
        let _ = writeln!(s, "complement={}", self.complement);
        s
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
