//! Delta-method prediction intervals for small neural regressors, with the
//! parameter covariance estimated from a score-driven streaming sketch of the
//! per-example gradient matrix.
//!
//! The pipeline is: train an [`nn::Mlp`], stream its gradient rows through a
//! [`sketch::SketchState`], turn the result into a [`delta::CovarianceModel`]
//! and evaluate [`delta::predict_interval`]. [`oracle`] holds the exact
//! full-Jacobian method used for verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod codec;
pub mod data;
pub mod delta;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod oracle;
pub mod protocol;
pub mod sketch;

pub use data::{Dataset, Metrics, SplitSpec, StandardizationStats};
pub use delta::{build_covariance, predict_interval, CovarianceModel, CovarianceOptions, IntervalReport};
pub use error::{Error, ErrorKind, Result};
pub use linalg::{t_quantile, thin_svd, Matrix, ThinSvd};
pub use nn::{Activation, Architecture, Mlp, TrainConfig};
pub use oracle::ExactCovariance;
pub use sketch::{sketch_stream, ScoreKind, SketchResult, SketchState};
