//! News-conditioned time series forecasting.
//!
//! The crate pairs numeric series with candidate news and supplementary
//! context, renders instruction-tuning prompts, drives reasoning and
//! evaluation agents through a chat-completion contract, and iterates the
//! select → pair → train → validate → reflect loop.

pub mod agent;
pub mod corpus;
pub mod forecast;
pub mod pipeline;
pub mod prompt;
pub mod scalar;
pub mod series;
pub mod timefmt;

pub use scalar::Scalar;
pub use series::{
    compute_metrics, make_windows, parse_digits, serialize_digits, split_tasks, Domain,
    FormatPolicy, ForecastTask, ParseMode, SeriesError, SplitRole,
};

/// Series of `f64` values; the instantiation used across the pipeline.
pub type TimeSeries = series::TimeSeries<f64>;
/// Single-precision series.
pub type TimeSeries32 = series::TimeSeries<f32>;
pub type MetricReport = series::MetricReport<f64>;
pub type MetricReport32 = series::MetricReport<f32>;
