use std::sync::LazyLock;

use chrono::{DateTime, Duration, FixedOffset, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::client::AgentClient;
use super::{AgentError, Result};
use crate::prompt::{build_evaluation_prompts, DomainProfile, EvaluationRequest};
use crate::series::{FormatPolicy, ForecastTask};
use crate::timefmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OccurredAt {
    Timestamp(DateTime<Utc>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedNews {
    pub missed_news: String,
    pub occurred_at: OccurredAt,
    pub reasoning: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedNewsReport {
    pub entries: Vec<MissedNews>,
    pub raw: String,
}

static NEWS_ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)missed\s+news(?:\s+summary)?\s*(?:\*\*)?\s*(?:\bis\b|:)\s*(?:\*\*)?").unwrap()
});
static TIME_ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:occurred\s+at|publication\s+time)\s*(?:\*\*)?\s*:?\s*(?:\*\*)?").unwrap()
});
static REASON_ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:the\s+)?possible\s+reasoning\s*(?:\*\*)?\s*(?:\bis\b|:)?\s*(?:\*\*)?\s*").unwrap()
});
static TIMESTAMP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\d{4}-\d{1,2}-\d{1,2}(?:[ T]\d{1,2}:\d{2}(?::\d{2})?)?").unwrap());

fn clean(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '“' | '”' | '*' | ',' | '.' | '-' | ':'))
        .trim()
        .to_string()
}

/// Extract missed-news entries from an evaluation reply.
///
/// Accepts the requested one-line template ("The missed news is …,
/// occurred at …, the possible reasoning is …") and the common labelled
/// variants ("Missed News Summary: …", "Publication Time: …", "Possible
/// Reasoning: …"), case-insensitively. An entry needs all three parts; a
/// reply without them yields no entries. The reply is always kept.
pub fn parse_missed_news(reply: &str) -> MissedNewsReport {
    let anchors: Vec<_> = NEWS_ANCHOR.find_iter(reply).collect();
    let mut entries = Vec::new();
    for (i, m) in anchors.iter().enumerate() {
        let end = anchors.get(i + 1).map(|n| n.start()).unwrap_or(reply.len());
        let segment = &reply[m.end()..end];
        let Some(t) = TIME_ANCHOR.find(segment) else { continue };
        let Some(r) = REASON_ANCHOR.find_at(segment, t.end()) else { continue };
        let news = clean(&segment[..t.start()]);
        let when = &segment[t.end()..r.start()];
        let reasoning = segment[r.end()..].lines().next().map(clean).unwrap_or_default();
        if news.is_empty() || reasoning.is_empty() {
            continue;
        }
        let occurred_at = TIMESTAMP
            .find(when)
            .and_then(|ts| timefmt::parse_timestamp(ts.as_str()))
            .map(OccurredAt::Timestamp)
            .unwrap_or_else(|| OccurredAt::Text(clean(when.lines().next().unwrap_or_default())));
        entries.push(MissedNews { missed_news: news, occurred_at, reasoning });
    }
    MissedNewsReport { entries, raw: reply.to_string() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOutcome {
    pub report: MissedNewsReport,
    pub updated_logic_text: String,
    pub errors: Vec<f64>,
}

/// Evaluation agent: the first three prompts go out as one conversation;
/// the logic-derivation prompt follows as a second call that includes the
/// first reply.
pub struct EvaluationAgent<'a> {
    pub client: &'a AgentClient,
    pub profile: &'a DomainProfile,
    pub zone: FixedOffset,
    pub policy: FormatPolicy,
}

#[derive(Debug, Clone, Copy)]
pub struct EvaluationInput<'a> {
    pub background: &'a str,
    pub selected_news: &'a str,
    pub all_news: &'a str,
    pub actual: &'a [f64],
    pub predicted: &'a [f64],
    pub lookback: Duration,
}

impl EvaluationAgent<'_> {
    pub fn run(&self, task: &ForecastTask, input: EvaluationInput) -> Result<EvaluationOutcome> {
        if input.actual.len() != input.predicted.len() {
            return Err(AgentError::Prompt(crate::prompt::PromptError::Invalid(format!(
                "{} actual vs {} predicted values",
                input.actual.len(),
                input.predicted.len()
            ))));
        }
        let errors: Vec<f64> = input.predicted.iter().zip(input.actual).map(|(p, a)| p - a).collect();
        let req = EvaluationRequest {
            region: &task.region,
            lookback: input.lookback,
            horizon: task.horizon_span(),
            background: input.background,
            selected_news: input.selected_news,
            all_news: input.all_news,
            actual: input.actual,
            errors: &errors,
            prediction_date: task.forecast_start.with_timezone(&self.zone).date_naive(),
            policy: self.policy,
        };
        let bundle = build_evaluation_prompts(self.profile, &req)?;
        let (first, rest) = bundle.split_after_user(3);
        let missed_reply = self.client.send(&first)?;
        let report = parse_missed_news(&missed_reply);
        if report.entries.is_empty() {
            log::debug!("task {}: no missed-news entries recognized", task.id);
        }
        let followup = first.continued(&missed_reply, rest);
        let updated_logic_text = self.client.send(&followup)?.trim().to_string();
        Ok(EvaluationOutcome { report, updated_logic_text, errors })
    }
}
