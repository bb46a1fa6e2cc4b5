//! Agent runtime: the chat-completion client contract, the reasoning
//! (news selection) and evaluation (missed news) agents, and selection
//! logic versioning.

mod client;
mod evaluation;
mod logic;
mod selection;

pub use client::{
    read_transcript, wire_reply, wire_request, AgentClient, ChatModel, DenyAllTransport, Endpoint,
    HttpChat, HttpTransport, ModelClientConfig, ReplayChat, ResponderChat, ScriptedChat,
    TranscriptRecord, Transport,
};
pub use evaluation::{
    parse_missed_news, EvaluationAgent, EvaluationInput, EvaluationOutcome, MissedNews,
    MissedNewsReport, OccurredAt,
};
pub use logic::{consolidate_logic, generate_default_logic, LogicSource, Provenance, ReasoningLogic};
pub use selection::{
    extract_json, match_source, parse_selection, EffectCategory, ReasoningAgent, ReasoningOutcome,
    SelectedNews, SelectionResult, REPAIR_INSTRUCTION, SOURCE_MATCH_THRESHOLD,
};

use crate::prompt::PromptError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("replay miss: no recorded reply for bundle {0}")]
    ReplayMiss(String),
    #[error("unparseable agent reply after {retries} re-asks: {reason}")]
    Parse { raw: String, reason: String, retries: u32 },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("logic: {0}")]
    Logic(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, AgentError>;
