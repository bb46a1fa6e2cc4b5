use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ForecastError, Result};
use crate::agent::{AgentClient, ChatModel, ModelClientConfig, Transport};
use crate::prompt::{Message, PromptBundle, Purpose, TrainingExample};
use crate::series::{parse_digits, ForecastTask, ParseMode, SeriesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    SeasonalNaive,
    Mock,
    SyntheticOracle,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Remote => "remote",
            BackendKind::SeasonalNaive => "seasonal_naive",
            BackendKind::Mock => "mock",
            BackendKind::SyntheticOracle => "synthetic_oracle",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [BackendKind::Remote, BackendKind::SeasonalNaive, BackendKind::Mock, BackendKind::SyntheticOracle]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown backend {s:?}"))
    }
}

fn yes() -> bool {
    true
}

fn default_reasks() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastBackendConfig {
    pub kind: BackendKind,
    /// Reject horizon-length misses instead of padding with the last value.
    #[serde(default = "yes")]
    pub strict_horizon: bool,
    /// Client settings for the remote kind.
    #[serde(default)]
    pub remote: Option<ModelClientConfig>,
    /// Re-asks when a remote reply is short.
    #[serde(default = "default_reasks")]
    pub reasks: u32,
    /// Seasonal period in points; defaults to points per day.
    #[serde(default)]
    pub period: Option<usize>,
    /// Values the mock returns; when absent it repeats the last history value.
    #[serde(default)]
    pub mock_values: Option<Vec<f64>>,
}

impl ForecastBackendConfig {
    pub fn of_kind(kind: BackendKind) -> Self {
        Self { kind, strict_horizon: true, remote: None, reasks: default_reasks(), period: None, mock_values: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub task_ref: String,
    pub predicted: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_reply: Option<String>,
    pub backend: BackendKind,
    pub latency_ms: u64,
}

/// Produces point forecasts for a task from its inference example.
pub trait ForecastBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// `history` is the task's history window; `example.output` is empty.
    fn predict(&self, task: &ForecastTask, history: &[f64], example: &TrainingExample) -> Result<(Vec<f64>, Option<String>)>;

    fn forecast(&self, task: &ForecastTask, history: &[f64], example: &TrainingExample) -> Result<ForecastResult> {
        if !example.output.is_empty() {
            return Err(ForecastError::Config(format!("task {}: inference example carries an output", task.id)));
        }
        let started = Instant::now();
        let (predicted, raw_reply) = self.predict(task, history, example)?;
        if let Some(i) = predicted.iter().position(|v| !v.is_finite()) {
            return Err(ForecastError::Series(SeriesError::NonFinite { index: i }));
        }
        Ok(ForecastResult {
            task_ref: task.id.clone(),
            predicted,
            raw_reply,
            backend: self.kind(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

fn fit_horizon(mut values: Vec<f64>, horizon: usize, strict: bool) -> Result<Vec<f64>> {
    if values.len() >= horizon {
        values.truncate(horizon);
        return Ok(values);
    }
    if strict || values.is_empty() {
        return Err(ForecastError::Series(SeriesError::HorizonMismatch { expected: horizon, parsed: values.len() }));
    }
    let last = *values.last().expect("nonempty");
    values.resize(horizon, last);
    Ok(values)
}

/// Sends `instruction + "\n" + input` to a completion endpoint and decodes
/// the digits of the reply.
pub struct RemoteBackend {
    client: AgentClient,
    reasks: u32,
    strict: bool,
}

impl RemoteBackend {
    pub fn new(client: AgentClient, reasks: u32, strict: bool) -> Self {
        Self { client, reasks, strict }
    }

    pub fn prompt(example: &TrainingExample) -> PromptBundle {
        PromptBundle {
            purpose: Purpose::Forecast,
            messages: vec![Message::user(format!("{}\n{}", example.instruction, example.input))],
        }
    }
}

impl ForecastBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn predict(&self, task: &ForecastTask, _: &[f64], example: &TrainingExample) -> Result<(Vec<f64>, Option<String>)> {
        let mut bundle = Self::prompt(example);
        let mut best: Vec<f64> = Vec::new();
        let mut last_reply = String::new();
        for attempt in 0..=self.reasks {
            let reply = self.client.send(&bundle)?;
            let parsed: Vec<f64> = parse_digits(&reply, Some(task.horizon), ParseMode::Lenient).unwrap_or_default();
            if parsed.len() > best.len() {
                best = parsed;
            }
            if best.len() >= task.horizon {
                return Ok((best, Some(reply)));
            }
            if attempt < self.reasks {
                let ask = format!(
                    "Please output exactly {} comma-separated values and nothing else.",
                    task.horizon
                );
                bundle = bundle.continued(&reply, [Message::user(ask)]);
            }
            last_reply = reply;
        }
        fit_horizon(best, task.horizon, self.strict).map(|v| (v, Some(last_reply)))
    }
}

/// Repeats the last full period of history.
pub struct SeasonalNaive {
    pub period: Option<usize>,
}

impl ForecastBackend for SeasonalNaive {
    fn kind(&self) -> BackendKind {
        BackendKind::SeasonalNaive
    }

    fn predict(&self, task: &ForecastTask, history: &[f64], _: &TrainingExample) -> Result<(Vec<f64>, Option<String>)> {
        let period = match self.period {
            Some(p) => p,
            None => {
                let minutes = task.granularity_minutes.max(1) as usize;
                (24 * 60 / minutes).max(1)
            }
        };
        if period == 0 || history.len() < period {
            return Err(ForecastError::Config(format!(
                "task {}: seasonal period {period} exceeds history of {}",
                task.id,
                history.len()
            )));
        }
        let last = &history[history.len() - period..];
        Ok(((0..task.horizon).map(|i| last[i % period]).collect(), None))
    }
}

/// Scripted values, or the last history value repeated.
pub struct MockBackend {
    pub values: Option<Vec<f64>>,
    pub strict: bool,
}

impl ForecastBackend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn predict(&self, task: &ForecastTask, history: &[f64], _: &TrainingExample) -> Result<(Vec<f64>, Option<String>)> {
        let values = match &self.values {
            Some(v) => fit_horizon(v.clone(), task.horizon, self.strict)?,
            None => vec![*history.last().unwrap_or(&0.0); task.horizon],
        };
        Ok((values, None))
    }
}

/// One effect known to the oracle: applies while news containing `marker`
/// is present in the prompt input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEffect {
    pub marker: String,
    pub onset: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// Relative change, e.g. 0.2 for +20%.
    pub magnitude: f64,
}

/// Ground-truth generator for synthetic scenarios: base signal times one
/// plus the sum of effects whose news appears in the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    pub start: DateTime<Utc>,
    pub granularity_minutes: i64,
    pub base: Vec<f64>,
    pub effects: Vec<OracleEffect>,
}

impl OracleModel {
    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + chrono::Duration::minutes(self.granularity_minutes * index as i64)
    }

    /// Values over `range` given which effects are considered active.
    pub fn generate(&self, range: std::ops::Range<usize>, active: &[&OracleEffect]) -> Vec<f64> {
        range
            .map(|i| {
                let t = self.timestamp(i);
                let lift: f64 = active.iter().filter(|e| e.onset <= t && t < e.end).map(|e| e.magnitude).sum();
                self.base[i] * (1.0 + lift)
            })
            .collect()
    }

    pub fn detected<'a>(&'a self, text: &str) -> Vec<&'a OracleEffect> {
        self.effects.iter().filter(|e| text.contains(&e.marker)).collect()
    }
}

pub struct SyntheticOracle {
    pub model: Arc<OracleModel>,
}

impl ForecastBackend for SyntheticOracle {
    fn kind(&self) -> BackendKind {
        BackendKind::SyntheticOracle
    }

    fn predict(&self, task: &ForecastTask, _: &[f64], example: &TrainingExample) -> Result<(Vec<f64>, Option<String>)> {
        let range = task.target_range();
        if range.end > self.model.base.len() {
            return Err(ForecastError::Config(format!("task {} lies outside the oracle's series", task.id)));
        }
        let active = self.model.detected(&example.input);
        Ok((self.model.generate(range, &active), None))
    }
}

/// Backend for a config. The oracle kind needs a model; the remote kind
/// uses `transport` for its client.
pub fn build_backend(
    config: &ForecastBackendConfig,
    transport: Arc<dyn Transport>,
    oracle: Option<Arc<OracleModel>>,
    mock_chat: Option<Box<dyn ChatModel>>,
) -> Result<Box<dyn ForecastBackend>> {
    Ok(match config.kind {
        BackendKind::Remote => {
            let cfg = config
                .remote
                .as_ref()
                .ok_or_else(|| ForecastError::Config("remote backend needs [backend.remote]".into()))?;
            let client = AgentClient::from_config(cfg, transport, mock_chat).map_err(ForecastError::Agent)?;
            Box::new(RemoteBackend::new(client, config.reasks, config.strict_horizon))
        }
        BackendKind::SeasonalNaive => Box::new(SeasonalNaive { period: config.period }),
        BackendKind::Mock => Box::new(MockBackend { values: config.mock_values.clone(), strict: config.strict_horizon }),
        BackendKind::SyntheticOracle => Box::new(SyntheticOracle {
            model: oracle.ok_or_else(|| ForecastError::Config("synthetic_oracle needs a synthetic scenario".into()))?,
        }),
    })
}
