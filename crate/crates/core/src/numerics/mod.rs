//! Dense linear algebra and statistics kernels: standardization, PCA,
//! truncated SVD, Moore-Penrose inverse and logistic regression.
//!
//! Every routine is deterministic. Singular vectors follow a fixed sign
//! convention (largest-magnitude entry of each right singular vector is
//! non-negative) so pipelines reproduce bit-for-bit.

mod logistic;
mod matrix;
mod pca;
mod svd;

pub use logistic::{
    logistic_fit, logistic_predict, LogisticFit, LogisticModel, MAX_ITERATIONS,
    PARAMETER_TOLERANCE, RIDGE_PENALTY,
};
pub use matrix::{cholesky, cholesky_solve, Matrix};
pub use pca::{
    pca_fit, pca_transform, standardize_fit, PcaModel, StandardizationParams, DEGENERATE_STDDEV,
};
pub use svd::{pseudoinverse, svd_truncated, TruncatedSvd, RELATIVE_RANK_TOLERANCE};
