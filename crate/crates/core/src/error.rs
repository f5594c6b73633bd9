use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix data has length {len}, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("sketch has consumed no rows")]
    EmptyStream,

    #[error("covariance is singular: lambda + lambda_n = 0 with a zero singular value at index {index}")]
    SingularCovariance { index: usize },

    #[error("non-positive residual degrees of freedom: n = {n}, p* = {p_star}")]
    DegreesOfFreedom { n: usize, p_star: f64 },

    #[error("matrix is singular or rank deficient")]
    Singular,

    #[error("exact method refused: {rows} examples x {params} parameters exceeds the size gate")]
    SizeGate { rows: usize, params: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("constant column `{0}`")]
    ConstantColumn(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("bad file format in {context}: {reason}")]
    Format { context: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    StdIo(#[from] std::io::Error),
}

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Domain { .. } => ErrorKind::Config,
            Error::Data(_)
            | Error::ConstantColumn(_)
            | Error::MissingColumn(_)
            | Error::Format { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::StdIo(_)
            | Error::SizeGate { .. } => ErrorKind::Data,
            Error::DimensionMismatch { .. }
            | Error::BadShape { .. }
            | Error::NonFinite { .. }
            | Error::NoConvergence { .. }
            | Error::EmptyStream
            | Error::SingularCovariance { .. }
            | Error::DegreesOfFreedom { .. }
            | Error::Singular
            | Error::TrainingDiverged { .. } => ErrorKind::Numeric,
        }
    }
}
