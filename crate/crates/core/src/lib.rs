//! Data-collaboration quasi-experiments: estimating average treatment effects
//! from covariates split across parties by rows (subjects) and columns
//! (covariates), where each party shares only a dimensionality-reduced
//! representation of its block.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: matrix kernels (PCA, truncated SVD, pseudoinverse, IRLS logistic regression)
//! - [`datamodel`]: datasets, block partitions, party views and collaboration scopes
//! - [`collaboration`]: anchor data, intermediate representations and their integration
//! - [`causal`]: propensity scores, nearest-neighbour matching and IPW estimators
//! - [`metrics`]: gap, propensity inconsistency and covariate balance
//! - [`experiments`]: synthetic data, bootstrap scenarios and result tables

pub mod causal;
pub mod collaboration;
pub mod datamodel;
mod error;
pub mod experiments;
pub mod metrics;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::Matrix;
