//! Prompt construction: forecasting examples in the four prompt modes and
//! the reasoning, evaluation, consolidation and logic-generation bundles.
//!
//! Fixed wording lives in `templates/*.tmpl` using `{{name}}` placeholders
//! and `{{#name}}…{{/name}}` optional sections (see [`template`]).

mod bundle;
mod forecast;
mod profile;
pub mod template;

pub use bundle::{
    build_consolidation_prompts, build_evaluation_prompts, build_logic_generation_prompts,
    build_reasoning_prompts, news_json, EvaluationRequest, Message, NewsDigest, PromptBundle,
    Purpose, Role,
};
pub use forecast::{build_forecast_example, ExampleContext, NewsSentence, PromptMode, TrainingExample};
pub use profile::DomainProfile;

use crate::agent::EffectCategory;

/// News sentences per forecasting prompt when no cap is configured.
pub const DEFAULT_NEWS_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("mode error: {0}")]
    Mode(String),
    #[error("invalid prompt input: {0}")]
    Invalid(String),
    #[error("template: {0}")]
    Template(String),
}

/// A candidate sentence with the effect category the agent assigned, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSentence {
    pub sentence: NewsSentence,
    pub category: Option<EffectCategory>,
}

fn priority(c: Option<EffectCategory>) -> u8 {
    match c {
        Some(EffectCategory::RealTime) => 0,
        Some(EffectCategory::ShortTerm) => 1,
        Some(EffectCategory::LongTerm) => 2,
        None => 3,
    }
}

/// Keep at most `cap` sentences: real-time before short-term before
/// long-term, most recent first within a category. The survivors are
/// returned in chronological order; identical text is kept once.
pub fn cap_news(mut ranked: Vec<RankedSentence>, cap: usize) -> Vec<NewsSentence> {
    ranked.sort_by(|a, b| {
        priority(a.category)
            .cmp(&priority(b.category))
            .then_with(|| b.sentence.time.cmp(&a.sentence.time))
            .then_with(|| a.sentence.text.cmp(&b.sentence.text))
    });
    let mut kept: Vec<NewsSentence> = Vec::new();
    for r in ranked {
        if kept.len() == cap {
            break;
        }
        if !kept.iter().any(|k| k.text == r.sentence.text) {
            kept.push(r.sentence);
        }
    }
    kept.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.text.cmp(&b.text)));
    kept
}
