//! Dense matrix primitives, thin SVD and Student-t quantiles.

mod chol;
mod matrix;
mod svd;
mod tdist;

pub use chol::Cholesky;
pub(crate) use matrix::gemm_slices;
pub use matrix::{axpy, dot, norm2, Matrix};
pub use svd::{sym_eigen, thin_svd, SymEigen, ThinSvd, CLAMP_RTOL};
pub use tdist::{inc_beta, ln_gamma, t_cdf, t_pdf, t_quantile};
