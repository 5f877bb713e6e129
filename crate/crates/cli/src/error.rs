use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("ingestion error: {0}")]
    Ingest(String),
    #[error("runtime error: {0}")]
    Runtime(dcqe_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Ingest(_) => 4,
            CliError::Runtime(_) => 5,
            CliError::Io(_) => 6,
        }
    }

    pub(crate) fn config(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{key}: {msg}"))
    }
}

impl From<dcqe_core::Error> for CliError {
    fn from(e: dcqe_core::Error) -> Self {
        match e {
            dcqe_core::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
