//! Configuration, CSV ingestion, execution and report writing for `dcqe`.

pub mod commands;
pub mod config;
mod error;
pub mod ingest;
pub mod report;

pub use error::{CliError, CliResult};
