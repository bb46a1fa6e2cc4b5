use thiserror::Error;

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("no parseable values: {0}")]
    ParseFailure(String),

    #[error("expected {expected} values, parsed {parsed}")]
    HorizonMismatch { expected: usize, parsed: usize },

    #[error("window error: {0}")]
    WindowError(String),

    #[error("split error: {0}")]
    SplitError(String),

    #[error("metric error: {0}")]
    MetricError(String),

    #[error("line {line}: {reason}")]
    Ingest { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),
}
