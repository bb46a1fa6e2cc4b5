use std::path::{Path, PathBuf};

use chrono::{Duration, FixedOffset};
use serde::{Deserialize, Serialize};

use super::scenario::ScenarioParams;
use super::{PipelineError, Result};
use crate::agent::{LogicSource, ModelClientConfig};
use crate::corpus::NewsFormat;
use crate::forecast::{BackendKind, ForecastBackendConfig};
use crate::prompt::{DomainProfile, PromptMode, DEFAULT_NEWS_CAP};
use crate::series::{Domain, FormatPolicy, DEFAULT_VALIDATION_CAP};

pub const DEFAULT_MAX_ITERATIONS: usize = 4;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;
pub const DEFAULT_IN_FLIGHT: usize = 4;

fn default_modes() -> Vec<PromptMode> {
    vec![PromptMode::TextualFilteredNews]
}
fn default_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}
fn default_fraction() -> f64 {
    DEFAULT_VALIDATION_FRACTION
}
fn default_cap() -> usize {
    DEFAULT_VALIDATION_CAP
}
fn default_news_cap() -> usize {
    DEFAULT_NEWS_CAP
}
fn default_in_flight() -> usize {
    DEFAULT_IN_FLIGHT
}
fn default_logic_source() -> LogicSource {
    LogicSource::Seed
}
fn default_backend() -> ForecastBackendConfig {
    ForecastBackendConfig::of_kind(BackendKind::SeasonalNaive)
}
fn yes() -> bool {
    true
}

/// Where the loop's inputs come from when no synthetic scenario is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub series: Option<PathBuf>,
    #[serde(default)]
    pub news: Option<PathBuf>,
    /// Inferred from the news file extension when absent.
    #[serde(default)]
    pub news_format: Option<NewsFormat>,
    #[serde(default)]
    pub supplementary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub domain: Domain,
    /// Only series in these regions are windowed; empty keeps all.
    #[serde(default)]
    pub regions: Vec<String>,
    /// Prompt mode per iteration; the last entry repeats.
    #[serde(default = "default_modes")]
    pub modes: Vec<PromptMode>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_cap")]
    pub validation_cap: usize,
    /// Defaults to 7 days for daily series and 2 days otherwise.
    #[serde(default)]
    pub lookback_minutes: Option<i64>,
    #[serde(default = "yes")]
    pub include_international: bool,
    #[serde(default)]
    pub extra_regions: Vec<String>,
    #[serde(default = "default_news_cap")]
    pub news_cap: usize,
    #[serde(default)]
    pub input_len: Option<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Window stride in points; defaults to the horizon.
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub format: FormatPolicy,
    /// Offset of the zone used for calendar dates.
    #[serde(default)]
    pub utc_offset_minutes: i32,
    #[serde(default = "default_logic_source")]
    pub logic_source: LogicSource,
    /// A user-supplied initial logic; overrides `logic_source`.
    #[serde(default)]
    pub logic_path: Option<PathBuf>,
    /// Concurrent agent and forecast calls within a stage.
    #[serde(default = "default_in_flight")]
    pub in_flight: usize,
    /// Run between dataset emission and validation for the remote backend;
    /// `{dataset_path}` and `{output_tag}` are substituted.
    #[serde(default)]
    pub training_hook: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_backend")]
    pub backend: ForecastBackendConfig,
    #[serde(default)]
    pub agent: ModelClientConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub synthetic: Option<ScenarioParams>,
    /// Replaces the built-in wording; required for custom domains.
    #[serde(default)]
    pub profile: Option<DomainProfile>,
}

impl PipelineConfig {
    /// Defaults for a domain with no data source configured.
    pub fn new(domain: Domain) -> Self {
        toml::from_str(&format!("domain = \"{}\"", domain.name())).expect("defaults deserialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        fix(&mut config.data.series);
        fix(&mut config.data.news);
        fix(&mut config.data.supplementary);
        fix(&mut config.logic_path);
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.max_iterations < 1 {
            return fail("max_iterations must be at least 1".into());
        }
        if self.modes.is_empty() {
            return fail("modes must name at least one prompt mode".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail(format!("validation_fraction {} outside (0, 1)", self.validation_fraction));
        }
        if self.news_cap == 0 {
            return fail("news_cap must be at least 1".into());
        }
        if self.in_flight == 0 {
            return fail("in_flight must be at least 1".into());
        }
        if self.lookback_minutes.is_some_and(|m| m <= 0) {
            return fail("lookback_minutes must be positive".into());
        }
        if [self.input_len, self.horizon, self.stride].contains(&Some(0)) {
            return fail("input_len, horizon and stride must be positive".into());
        }
        if FixedOffset::east_opt(self.utc_offset_minutes * 60).is_none() {
            return fail(format!("utc_offset_minutes {} out of range", self.utc_offset_minutes));
        }
        if self.synthetic.is_none() && self.data.series.is_none() {
            return fail("either [synthetic] or data.series must be configured".into());
        }
        if self.synthetic.is_some() && self.data.series.is_some() {
            return fail("[synthetic] and data.series are mutually exclusive".into());
        }
        if self.backend.kind == BackendKind::SyntheticOracle && self.synthetic.is_none() {
            return fail("the synthetic_oracle backend needs a [synthetic] scenario".into());
        }
        if self.backend.kind == BackendKind::Remote && self.backend.remote.is_none() {
            return fail("the remote backend needs [backend.remote]".into());
        }
        self.agent.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.profile()?;
        Ok(())
    }

    pub fn profile(&self) -> Result<DomainProfile> {
        self.profile
            .clone()
            .or_else(|| DomainProfile::builtin(self.domain))
            .ok_or_else(|| PipelineError::Config(format!("domain {} needs a [profile] section", self.domain.name())))
    }

    pub fn zone(&self) -> FixedOffset {
        FixedOffset::east_opt(self.utc_offset_minutes * 60).expect("validated offset")
    }

    pub fn mode_for(&self, iteration: usize) -> PromptMode {
        let i = iteration.saturating_sub(1).min(self.modes.len() - 1);
        self.modes[i]
    }

    /// Whether any iteration selects news through the reasoning agent.
    pub fn uses_agents(&self) -> bool {
        self.modes.iter().take(self.max_iterations).any(|m| *m == PromptMode::TextualFilteredNews)
    }

    pub fn lookback(&self) -> Option<Duration> {
        self.lookback_minutes.map(Duration::minutes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_table() {
        let c = PipelineConfig::from_toml("domain = \"electricity\"\n[data]\nseries = \"s.jsonl\"").unwrap();
        assert_eq!(c.max_iterations, 4);
        assert_eq!(c.news_cap, 8);
        assert_eq!(c.validation_cap, 32);
        assert_eq!(c.modes, [PromptMode::TextualFilteredNews]);
        assert_eq!(c.backend.kind, BackendKind::SeasonalNaive);
        assert_eq!(c.format, FormatPolicy::Decimals(1));
        let p = c.profile().unwrap();
        assert_eq!((p.input_len, p.horizon), (48, 48));
    }

    #[test]
    fn rejects_bad_values() {
        let base = "domain = \"traffic\"\n[data]\nseries = \"s.jsonl\"\n";
        for extra in ["max_iterations = 0", "validation_fraction = 1.0", "modes = []", "bogus = 1"] {
            let text = format!("{extra}\n{base}");
            assert!(PipelineConfig::from_toml(&text).is_err(), "{extra}");
        }
        assert!(PipelineConfig::from_toml("domain = \"custom\"\n[data]\nseries = \"s\"").is_err());
        assert!(PipelineConfig::from_toml("domain = \"traffic\"").is_err());
    }

    #[test]
    fn mode_schedule_repeats_last() {
        let mut c = PipelineConfig::new(Domain::Traffic);
        c.modes = vec![PromptMode::NumericOnly, PromptMode::TextualFilteredNews];
        assert_eq!(c.mode_for(1), PromptMode::NumericOnly);
        assert_eq!(c.mode_for(4), PromptMode::TextualFilteredNews);
    }

    #[test]
    fn toml_roundtrip() {
        let mut c = PipelineConfig::new(Domain::Exchange);
        c.data.series = Some("x.jsonl".into());
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
