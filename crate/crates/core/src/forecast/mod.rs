//! Forecasting backends and the instruction-tuning dataset format.

mod backend;
mod dataset;

pub use backend::{
    build_backend, BackendKind, ForecastBackend, ForecastBackendConfig, ForecastResult, MockBackend,
    OracleEffect, OracleModel, RemoteBackend, SeasonalNaive, SyntheticOracle,
};
pub use dataset::{emit_dataset, read_dataset, write_dataset};

use crate::agent::AgentError;
use crate::series::SeriesError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("example {index}: {reason}")]
    Emit { index: usize, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ForecastError>;
