//! One evaluation repeat: split, standardize, train, then produce test-set
//! intervals with the sketched or the exact covariance.

use std::time::Instant;

use crate::data::{metrics, Dataset, Metrics, SplitSpec, StandardizationStats};
use crate::delta::{build_covariance, predict_intervals, CovarianceModel, CovarianceOptions, IntervalReport};
use crate::error::{Error, Result};
use crate::nn::{train, Architecture, Mlp, TrainConfig};
use crate::oracle::{exact_covariance, exact_intervals, ExactCovariance};
use crate::sketch::{ScoreKind, SketchResult, SketchState};

/// Smallest training split the protocol accepts.
pub const MIN_TRAIN_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// sketched covariance of rank `k`
    Id {
        k: usize,
        complement: bool,
    },
    Exact,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Id { .. } => "id",
            Method::Exact => "exact",
        }
    }
}

/// How the configured `λ` maps onto the penalty of `Σ(f − y)² + λ‖w‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaScale {
    /// used as is
    #[default]
    Sum,
    /// multiplied by the training-set size, i.e. `λ` is the penalty of the
    /// mean-squared-error form `mean((f − y)²) + λ‖w‖²`
    PerExample,
}

impl LambdaScale {
    pub fn name(self) -> &'static str {
        match self {
            LambdaScale::Sum => "sum",
            LambdaScale::PerExample => "per-example",
        }
    }
}

impl std::str::FromStr for LambdaScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(LambdaScale::Sum),
            "per-example" => Ok(LambdaScale::PerExample),
            other => Err(Error::Config(format!("unknown lambda scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub arch: Architecture,
    /// `seed` is ignored, each repeat derives its own; `lambda` is read
    /// through `lambda_scale`.
    pub train: TrainConfig,
    pub lambda_scale: LambdaScale,
    pub split: SplitSpec,
    pub alpha: f64,
}

impl ProtocolConfig {
    pub fn new(lambda: f64, lambda_scale: LambdaScale) -> Self {
        Self {
            arch: Architecture::default(),
            train: TrainConfig::new(lambda),
            lambda_scale,
            split: SplitSpec::default(),
            alpha: 0.05,
        }
    }

    /// Penalty on the sum-of-squares objective for a training split of `n` rows.
    pub fn effective_lambda(&self, n: usize) -> f64 {
        match self.lambda_scale {
            LambdaScale::Sum => self.train.lambda,
            LambdaScale::PerExample => self.train.lambda * n as f64,
        }
    }
}

/// A trained repeat, ready for either interval method. Features and target
/// are z-scored with training statistics.
#[derive(Debug, Clone)]
pub struct PreparedRepeat {
    pub repeat: usize,
    pub stats: StandardizationStats,
    pub train: Dataset,
    pub test: Dataset,
    /// test responses in original units
    pub y_test: Vec<f64>,
    pub net: Mlp,
    /// penalty used in training, and hence in the covariance
    pub lambda: f64,
    /// training residuals `y − ŷ`, standardized units
    pub residuals: Vec<f64>,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

pub fn prepare_repeat(ds: &Dataset, cfg: &ProtocolConfig, repeat: usize) -> Result<PreparedRepeat> {
    let split = cfg.split.split(ds.len(), repeat)?;
    let seed = crate::data::split_mix(cfg.split.repeat_seed(repeat), 0x7261_696e);
    let mut prep = prepare_parts(&ds.subset(&split.train), &ds.subset(&split.test), cfg, seed)?;
    prep.repeat = repeat;
    Ok(prep)
}

/// Same as [`prepare_repeat`] for an explicit train/test pair (original
/// units) and training seed.
pub fn prepare_parts(
    train_raw: &Dataset,
    test_raw: &Dataset,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<PreparedRepeat> {
    if train_raw.len() < MIN_TRAIN_ROWS {
        return Err(Error::Data(format!(
            "training split has {} rows, at least {MIN_TRAIN_ROWS} are needed",
            train_raw.len()
        )));
    }
    let stats = StandardizationStats::fit(train_raw)?;
    let train_z = stats.apply(train_raw)?;
    let test_z = stats.apply(test_raw)?;

    let mut tcfg = cfg.train.clone();
    tcfg.lambda = cfg.effective_lambda(train_z.len());
    tcfg.seed = seed;
    let rep = train(&train_z.x, &train_z.y, &cfg.arch, &tcfg)?;
    let fitted = rep.net.predict(&train_z.x)?;
    let residuals = train_z.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(PreparedRepeat {
        repeat: 0,
        stats,
        train: train_z,
        test: test_z,
        y_test: test_raw.y.clone(),
        net: rep.net,
        lambda: tcfg.lambda,
        residuals,
        epochs: rep.epochs,
        initial_loss: rep.initial_loss,
        final_loss: rep.final_loss,
    })
}

/// Test-set intervals (original units) and their metrics.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub intervals: Vec<IntervalReport>,
    pub metrics: Metrics,
    pub p_star: f64,
    /// seconds spent after training: gradients, covariance and intervals
    pub wall_seconds: f64,
}

fn finish(prep: &PreparedRepeat, std_reports: Vec<IntervalReport>, p_star: f64, t0: Instant) -> Result<MethodOutcome> {
    let wall_seconds = t0.elapsed().as_secs_f64();
    let intervals: Vec<IntervalReport> = std_reports.iter().map(|r| prep.stats.interval_to_original(r)).collect();
    let metrics = metrics(&intervals, &prep.y_test, prep.stats.y_sd)?;
    Ok(MethodOutcome {
        intervals,
        metrics,
        p_star,
        wall_seconds,
    })
}

/// Streams the training Jacobian through a covariance-scored sketch of rank `k`.
pub fn sketch_jacobian(net: &Mlp, train: &Dataset, k: usize, lambda: f64) -> Result<SketchResult> {
    let mut state = SketchState::new(k, net.n_params(), ScoreKind::covariance(lambda)?)?;
    for row in net.jacobian_rows(&train.x) {
        state.update(&row?)?;
    }
    state.finalize()
}

pub fn run_id(
    prep: &PreparedRepeat,
    k: usize,
    complement: bool,
    alpha: f64,
) -> Result<(MethodOutcome, CovarianceModel)> {
    let lambda = prep.lambda;
    let t0 = Instant::now();
    let sk = sketch_jacobian(&prep.net, &prep.train, k, lambda)?;
    let model = build_covariance(&sk, lambda, &prep.residuals, CovarianceOptions { complement })?;
    let reps = predict_intervals(&prep.net, &model, &prep.test.x, alpha)?;
    let out = finish(prep, reps, model.p_star(), t0)?;
    Ok((out, model))
}

pub fn run_exact(prep: &PreparedRepeat, alpha: f64) -> Result<(MethodOutcome, ExactCovariance)> {
    let lambda = prep.lambda;
    let t0 = Instant::now();
    let j = prep.net.jacobian(&prep.train.x)?;
    let exact = exact_covariance(&j, lambda, &prep.residuals)?;
    let reps = exact_intervals(&prep.net, &exact, &prep.test.x, alpha)?;
    let out = finish(prep, reps, exact.p_star(), t0)?;
    Ok((out, exact))
}

pub fn run_method(prep: &PreparedRepeat, method: Method, alpha: f64) -> Result<MethodOutcome> {
    match method {
        Method::Id { k, complement } => run_id(prep, k, complement, alpha).map(|r| r.0),
        Method::Exact => run_exact(prep, alpha).map(|r| r.0),
    }
}

/// Exact and sketched spectra of the Jacobian and of the inverse covariance.
/// Covariance eigenvalues are sorted non-increasing.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub exact_sv: Vec<f64>,
    pub sketch_sv: Vec<f64>,
    pub exact_cov: Vec<f64>,
    pub sketch_cov: Vec<f64>,
}

pub fn spectrum(prep: &PreparedRepeat, k: usize) -> Result<Spectrum> {
    let lambda = prep.lambda;
    let j = prep.net.jacobian(&prep.train.x)?;
    let exact = exact_covariance(&j, lambda, &prep.residuals)?;
    let sk = sketch_jacobian(&prep.net, &prep.train, k, lambda)?;
    let model = build_covariance(&sk, lambda, &prep.residuals, CovarianceOptions::default())?;
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    Ok(Spectrum {
        exact_sv: exact.singular_values().to_vec(),
        sketch_sv: sk.d.clone(),
        exact_cov: sorted(exact.eigenvalues()),
        sketch_cov: sorted(model.d_sigma_inv()),
    })
}
