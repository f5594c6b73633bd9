#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deltasketch::{Error, ErrorKind};

use config::RunConfig;

/// Sketched delta-method prediction intervals for neural regressors.
#[derive(Debug, Parser)]
#[command(name = "deltasketch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on repeated splits and write interval metrics for one method.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the sketched and exact methods on the same trained networks.
    CompareExact {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write exact and sketched singular values for one split.
    Spectrum {
        #[command(flatten)]
        run: RunArgs,
        /// Which split to use.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Evaluate several sketch ranks, training once per split.
    SweepRank {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated ranks.
        #[arg(long)]
        ranks: Option<String>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Manifest entry name, or a CSV path together with --target.
    #[arg(long)]
    dataset: Option<String>,
    /// Target column when --dataset is a CSV path.
    #[arg(long)]
    target: Option<String>,
    /// Dataset manifest [default: data/manifest.txt].
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// File of `key = value` lines; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// id or exact.
    #[arg(long)]
    method: Option<String>,
    /// Sketch rank k [default: 500].
    #[arg(long)]
    rank: Option<String>,
    /// L2 coefficient [default: 0.01].
    #[arg(long)]
    lambda: Option<String>,
    /// sum or per-example [default: per-example].
    #[arg(long)]
    lambda_scale: Option<String>,
    /// Miscoverage level [default: 0.05].
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of random splits [default: 20].
    #[arg(long)]
    repeats: Option<String>,
    /// [default: 0.1]
    #[arg(long)]
    test_fraction: Option<String>,
    /// Candidate epoch counts chosen on a validation split, or `none`
    /// [default: 40,100,200,400].
    #[arg(long)]
    epoch_grid: Option<String>,
    /// Epochs when the grid is `none` [default: 100].
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    /// Comma-separated hidden widths, or `none` [default: 50,50].
    #[arg(long)]
    hidden: Option<String>,
    /// tanh or relu.
    #[arg(long)]
    activation: Option<String>,
    /// Add the complement-space term to the sketched variance.
    #[arg(long)]
    complement: bool,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write NA for timings so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("dataset", self.dataset.clone()),
            ("target", self.target.clone()),
            ("manifest", self.manifest.as_ref().map(|p| p.display().to_string())),
            ("method", self.method.clone()),
            ("rank", self.rank.clone()),
            ("lambda", self.lambda.clone()),
            ("lambda-scale", self.lambda_scale.clone()),
            ("alpha", self.alpha.clone()),
            ("seed", self.seed.clone()),
            ("repeats", self.repeats.clone()),
            ("test-fraction", self.test_fraction.clone()),
            ("epoch-grid", self.epoch_grid.clone()),
            ("epochs", self.epochs.clone()),
            ("batch-size", self.batch_size.clone()),
            ("learning-rate", self.learning_rate.clone()),
            ("hidden", self.hidden.clone()),
            ("activation", self.activation.clone()),
            ("complement", self.complement.then(|| "true".into())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("timing", self.no_timing.then(|| "false".into())),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Evaluate { run } => commands::evaluate(&run.resolve(&[])?),
        Command::CompareExact { run } => commands::compare_exact(&run.resolve(&[])?),
        Command::Spectrum { run, repeat } => {
            commands::spectrum(&run.resolve(&[("repeat", repeat.map(|r| r.to_string()))])?)
        }
        Command::SweepRank { run, ranks } => commands::sweep_rank(&run.resolve(&[("ranks", ranks)])?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err.chain().find_map(|e| e.downcast_ref::<Error>()).map(Error::kind);
    match kind {
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Data) => 3,
        Some(ErrorKind::Numeric) => 4,
        None if err.chain().any(|e| e.is::<std::io::Error>() || e.is::<csv::Error>()) => 3,
        None => 1,
    }
}

/// The error chain, skipping causes a wrapper already printed inline.
fn message(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let s = cause.to_string();
        if !msg.contains(&s) {
            msg.push_str(": ");
            msg.push_str(&s);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
