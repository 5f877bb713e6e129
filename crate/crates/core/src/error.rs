use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("labels contain a single class; both treated and control subjects are required")]
    DegenerateLabels,

    #[error("partition error: {0}")]
    Partition(String),

    #[error("scope error: {0}")]
    Scope(String),

    #[error("anchor error: {0}")]
    Anchor(String),

    #[error("incomplete collaboration: {0}")]
    IncompleteCollaboration(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("covariate {covariate} has zero pooled variance but different group means")]
    InfiniteImbalance { covariate: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resampling failed: {0}")]
    Resample(String),
}

pub type Result<T> = std::result::Result<T, Error>;
