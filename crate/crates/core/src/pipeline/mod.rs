//! The iterative select → pair → train → validate → reflect loop, its
//! configuration, run directories, ablation reports and synthetic scenarios.

mod config;
mod report;
mod run;
pub mod rundir;
mod scenario;

pub use config::{
    DataConfig, PipelineConfig, DEFAULT_IN_FLIGHT, DEFAULT_MAX_ITERATIONS, DEFAULT_VALIDATION_FRACTION,
};
pub use report::{curves_csv, report_ablation, AblationRow, AblationTable, CurvePoint};
pub use run::{
    leakage, CategoryCounts, IterationReport, LoopOutcome, LoopState, ModeResult, NewsStamp, PairingRecord,
    Pipeline, PipelineInputs, WindowRecord,
};
pub use rundir::{RunDir, RunManifest};
pub use scenario::{
    logic_for_topics, synth_scenario, topic_keyword, topics_in, NewsLabel, QuietAgent, ScenarioAgent,
    ScenarioParams, SyntheticScenario,
};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Loop stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Window,
    Logic,
    Select,
    Build,
    Emit,
    Train,
    Forecast,
    Metrics,
    Evaluate,
    Consolidate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("report: {0}")]
    Report(String),
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn stage_of(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Attach a stage tag to any displayable error.
pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T, E: fmt::Display> StageExt<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| PipelineError::Stage { stage, message: e.to_string() })
    }
}
