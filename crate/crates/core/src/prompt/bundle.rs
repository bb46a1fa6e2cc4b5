use chrono::{Duration, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::LazyLock;

use super::profile::DomainProfile;
use super::template::{self, Vars};
use super::PromptError;
use crate::agent::ReasoningLogic;
use crate::corpus::NewsItem;
use crate::series::{serialize_digits, FormatPolicy};
use crate::timefmt;

macro_rules! tmpl {
    ($name:literal) => {
        template::source(include_str!(concat!("../../templates/", $name, ".tmpl")))
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Reasoning,
    Evaluation,
    Consolidation,
    LogicGeneration,
    Forecast,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Reasoning => "reasoning",
            Purpose::Evaluation => "evaluation",
            Purpose::Consolidation => "consolidation",
            Purpose::LogicGeneration => "logic_generation",
            Purpose::Forecast => "forecast",
        }
    }
}

/// An ordered conversation sent to an agent in one call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub purpose: Purpose,
    pub messages: Vec<Message>,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[a-z_]+>|\{\{[^}]*\}\}").unwrap());

impl PromptBundle {
    /// Hex sha256 over the role-tagged message sequence; the replay key.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for m in &self.messages {
            h.update(serde_json::to_string(&m.role).expect("role").as_bytes());
            h.update([0x1e]);
            h.update(m.content.as_bytes());
            h.update([0x1f]);
        }
        hex::encode(h.finalize())
    }

    pub fn user_messages(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|m| m.role == Role::User)
    }

    /// All text, for scanning test doubles and audits.
    pub fn text(&self) -> String {
        self.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
    }

    /// Template tokens (`<name>` or `{{name}}`) left in any message.
    pub fn unresolved_placeholders(&self) -> Vec<String> {
        self.messages
            .iter()
            .flat_map(|m| PLACEHOLDER.find_iter(&m.content).map(|x| x.as_str().to_string()))
            .collect()
    }

    /// Leading messages up to and including the `n`-th user message, and
    /// the remainder.
    pub fn split_after_user(&self, n: usize) -> (PromptBundle, Vec<Message>) {
        let mut seen = 0;
        let mut cut = self.messages.len();
        for (i, m) in self.messages.iter().enumerate() {
            if m.role == Role::User {
                seen += 1;
                if seen == n {
                    cut = i + 1;
                    break;
                }
            }
        }
        (
            PromptBundle { purpose: self.purpose, messages: self.messages[..cut].to_vec() },
            self.messages[cut..].to_vec(),
        )
    }

    /// Continue the conversation with the model's reply and more messages.
    pub fn continued(&self, reply: &str, next: impl IntoIterator<Item = Message>) -> PromptBundle {
        let mut messages = self.messages.clone();
        messages.push(Message::assistant(reply));
        messages.extend(next);
        PromptBundle { purpose: self.purpose, messages }
    }
}

/// News as shown to agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsDigest {
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub region: String,
    pub time: String,
}

impl From<&NewsItem> for NewsDigest {
    fn from(n: &NewsItem) -> Self {
        Self {
            title: n.title.clone(),
            summary: n.summary.clone(),
            region: n.region.clone(),
            time: timefmt::news_time(&n.published_at),
        }
    }
}

pub fn news_json(items: &[NewsItem]) -> String {
    let digests: Vec<NewsDigest> = items.iter().map(NewsDigest::from).collect();
    serde_json::to_string(&digests).expect("news digests serialize")
}

fn profile_vars(profile: &DomainProfile) -> Vars {
    let mut v = Vars::new();
    v.set("target_phrase", profile.target_phrase.clone())
        .set("regions", profile.region_list.clone());
    v
}

/// Three user messages: the logic, the selection instruction, and the
/// candidate news with the output exemplar.
pub fn build_reasoning_prompts(
    profile: &DomainProfile,
    logic: &ReasoningLogic,
    prediction_date: NaiveDate,
    candidates: &[NewsItem],
    schema_example: &str,
) -> Result<PromptBundle, PromptError> {
    if logic.text.trim().is_empty() {
        return Err(PromptError::Invalid("reasoning logic is empty".into()));
    }
    let mut v = profile_vars(profile);
    v.set("logic", logic.text.clone())
        .set("prediction_date", timefmt::iso_date(prediction_date))
        .set("all_news", news_json(candidates))
        .set("schema", schema_example);
    Ok(PromptBundle {
        purpose: Purpose::Reasoning,
        messages: vec![
            Message::system(template::render(tmpl!("reasoning_system"), &v)?),
            Message::user(template::render(tmpl!("reasoning_logic"), &v)?),
            Message::user(template::render(tmpl!("reasoning_select"), &v)?),
            Message::user(template::render(tmpl!("reasoning_news"), &v)?),
        ],
    })
}

#[derive(Debug, Clone)]
pub struct EvaluationRequest<'a> {
    pub region: &'a str,
    pub lookback: Duration,
    pub horizon: Duration,
    pub background: &'a str,
    pub selected_news: &'a str,
    pub all_news: &'a str,
    pub actual: &'a [f64],
    /// Predicted minus actual, elementwise.
    pub errors: &'a [f64],
    pub prediction_date: NaiveDate,
    pub policy: FormatPolicy,
}

/// Four user messages: framing, background, the missed-news question and
/// the logic-derivation request.
pub fn build_evaluation_prompts(profile: &DomainProfile, req: &EvaluationRequest) -> Result<PromptBundle, PromptError> {
    if req.actual.len() != req.errors.len() {
        return Err(PromptError::Invalid(format!(
            "{} actual values but {} errors",
            req.actual.len(),
            req.errors.len()
        )));
    }
    let digits = |xs: &[f64]| serialize_digits(xs, req.policy).map_err(|e| PromptError::Invalid(e.to_string()));
    let mut region_vars = Vars::new();
    region_vars.set("region", req.region);
    let subject = template::render(&profile.evaluation_subject, &region_vars)?;

    let mut v = Vars::new();
    v.set("lookback", timefmt::lookback_phrase(req.lookback))
        .set("subject", subject)
        .set("horizon", timefmt::horizon_phrase(req.horizon))
        .set("note", profile.evaluation_note.clone().unwrap_or_default())
        .set("background", req.background)
        .set("selected_news", req.selected_news)
        .set("all_news", req.all_news)
        .set("actual", digits(req.actual)?)
        .set("errors", digits(req.errors)?)
        .set("prediction_date", timefmt::iso_date(req.prediction_date));
    let mut logic_vars = Vars::new();
    logic_vars.set("subject", profile.logic_subject.clone());
    Ok(PromptBundle {
        purpose: Purpose::Evaluation,
        messages: vec![
            Message::system(template::render(tmpl!("evaluation_system"), &v)?),
            Message::user(template::render(tmpl!("evaluation_assess"), &v)?),
            Message::user(template::render(tmpl!("evaluation_background"), &v)?),
            Message::user(template::render(tmpl!("evaluation_missed"), &v)?),
            Message::user(template::render(tmpl!("evaluation_logic"), &logic_vars)?),
        ],
    })
}

/// Two user messages: merge the updates, then rewrite the current logic.
pub fn build_consolidation_prompts(
    profile: &DomainProfile,
    updates: &[String],
    current: &ReasoningLogic,
) -> Result<PromptBundle, PromptError> {
    if updates.is_empty() {
        return Err(PromptError::Invalid("no logic updates to consolidate".into()));
    }
    let mut v = Vars::new();
    v.set("subject", profile.consolidation_subject.clone())
        .set("updates", updates.join("\n\n"))
        .set("current", current.text.clone());
    Ok(PromptBundle {
        purpose: Purpose::Consolidation,
        messages: vec![
            Message::system(template::render(tmpl!("consolidation_system"), &v)?),
            Message::user(template::render(tmpl!("consolidation_polish"), &v)?),
            Message::user(template::render(tmpl!("consolidation_rephrase"), &v)?),
        ],
    })
}

/// Open-ended request for an initial selection logic.
pub fn build_logic_generation_prompts(profile: &DomainProfile) -> Result<PromptBundle, PromptError> {
    let mut v = Vars::new();
    v.set("subject", profile.consolidation_subject.clone()).set(
        "frequency",
        timefmt::duration_phrase(Duration::minutes(profile.granularity_minutes)),
    );
    Ok(PromptBundle {
        purpose: Purpose::LogicGeneration,
        messages: vec![
            Message::system(template::render(tmpl!("generation_system"), &v)?),
            Message::user(template::render(tmpl!("generation_open"), &v)?),
        ],
    })
}
