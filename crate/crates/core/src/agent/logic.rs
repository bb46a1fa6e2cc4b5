use serde::{Deserialize, Serialize};

use super::client::AgentClient;
use super::{AgentError, Result};
use crate::prompt::{build_consolidation_prompts, build_logic_generation_prompts, DomainProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DefaultSeed,
    AgentGenerated,
    UserSupplied,
    /// Extended with evaluation-agent updates at an iteration boundary.
    EvaluationUpdate,
    Consolidated,
}

/// A version of the news-selection rubric. New versions are fresh values;
/// nothing mutates a logic in place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningLogic {
    pub version: u32,
    pub text: String,
    pub provenance: Provenance,
    pub parent_version: Option<u32>,
}

impl ReasoningLogic {
    pub fn initial(text: impl Into<String>, provenance: Provenance) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(AgentError::Logic("logic text is empty".into()));
        }
        Ok(Self { version: 1, text, provenance, parent_version: None })
    }

    pub fn user_supplied(text: impl Into<String>) -> Result<Self> {
        Self::initial(text, Provenance::UserSupplied)
    }

    /// The next version, derived from this one.
    pub fn successor(&self, text: impl Into<String>, provenance: Provenance) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(AgentError::Logic(format!("successor of version {} has empty text", self.version)));
        }
        Ok(Self { version: self.version + 1, text, provenance, parent_version: Some(self.version) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicSource {
    /// Bundled per-domain seed; falls back to `Agent` when none exists.
    Seed,
    /// Ask the agent with an open-ended prompt.
    Agent,
}

pub fn generate_default_logic(client: &AgentClient, profile: &DomainProfile, source: LogicSource) -> Result<ReasoningLogic> {
    if source == LogicSource::Seed {
        if let Some(seed) = profile.seed_logic.as_deref().filter(|s| !s.trim().is_empty()) {
            return ReasoningLogic::initial(seed, Provenance::DefaultSeed);
        }
        log::info!("no seed logic for domain {}; asking the agent", profile.domain.name());
    }
    let bundle = build_logic_generation_prompts(profile)?;
    let reply = client.send(&bundle)?;
    ReasoningLogic::initial(reply.trim(), Provenance::AgentGenerated)
}

/// Merge all collected updates into the next version in a single call.
pub fn consolidate_logic(
    client: &AgentClient,
    profile: &DomainProfile,
    updates: &[String],
    current: &ReasoningLogic,
) -> Result<ReasoningLogic> {
    let bundle = build_consolidation_prompts(profile, updates, current)?;
    let reply = client.send(&bundle)?;
    current.successor(reply.trim(), Provenance::Consolidated)
}
