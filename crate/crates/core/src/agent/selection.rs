use chrono::{DateTime, FixedOffset, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::client::AgentClient;
use super::logic::ReasoningLogic;
use super::{AgentError, Result};
use crate::corpus::{CandidateSet, NewsCorpus, NewsItem};
use crate::prompt::{build_reasoning_prompts, DomainProfile, Message, PromptBundle};
use crate::series::ForecastTask;
use crate::timefmt;

/// Appended after a reply that could not be parsed.
pub const REPAIR_INSTRUCTION: &str = "Your previous answer could not be parsed. Remember to only give the JSON output, including all relevant news, and make it the valid JSON format.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectCategory {
    LongTerm,
    ShortTerm,
    RealTime,
}

impl EffectCategory {
    pub const ALL: [EffectCategory; 3] = [EffectCategory::LongTerm, EffectCategory::ShortTerm, EffectCategory::RealTime];

    /// Category named by a reply key, e.g. "Real-Time Direct Effect on …".
    pub fn from_key(key: &str) -> Option<Self> {
        let k: String = key.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        if k.contains("longterm") {
            Some(EffectCategory::LongTerm)
        } else if k.contains("shortterm") {
            Some(EffectCategory::ShortTerm)
        } else if k.contains("realtime") {
            Some(EffectCategory::RealTime)
        } else {
            None
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedNews {
    pub news: String,
    pub region: String,
    pub time: DateTime<Utc>,
    pub rationality: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub long_term: Vec<SelectedNews>,
    pub short_term: Vec<SelectedNews>,
    pub real_time: Vec<SelectedNews>,
}

impl SelectionResult {
    pub fn get(&self, c: EffectCategory) -> &[SelectedNews] {
        match c {
            EffectCategory::LongTerm => &self.long_term,
            EffectCategory::ShortTerm => &self.short_term,
            EffectCategory::RealTime => &self.real_time,
        }
    }

    fn get_mut(&mut self, c: EffectCategory) -> &mut Vec<SelectedNews> {
        match c {
            EffectCategory::LongTerm => &mut self.long_term,
            EffectCategory::ShortTerm => &mut self.short_term,
            EffectCategory::RealTime => &mut self.real_time,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        EffectCategory::ALL.map(|c| self.get(c).len())
    }

    pub fn len(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries with their category, category by category.
    pub fn iter(&self) -> impl Iterator<Item = (EffectCategory, &SelectedNews)> {
        EffectCategory::ALL
            .into_iter()
            .flat_map(move |c| self.get(c).iter().map(move |n| (c, n)))
    }

    /// Drop entries the predicate rejects, returning how many went.
    pub fn retain(&mut self, mut keep: impl FnMut(&SelectedNews) -> bool) -> usize {
        let before = self.len();
        for c in EffectCategory::ALL {
            self.get_mut(c).retain(|n| keep(n));
        }
        before - self.len()
    }

    /// The agent's reply format, keyed by the profile's category names.
    pub fn to_agent_json(&self, keys: &[String; 3]) -> String {
        let mut obj = Map::new();
        for c in EffectCategory::ALL {
            let entries: Vec<Value> = self
                .get(c)
                .iter()
                .map(|n| {
                    let mut e = serde_json::json!({
                        "news": n.news,
                        "region": n.region,
                        "time": timefmt::news_time(&n.time),
                        "rationality": n.rationality,
                    });
                    if let Some(r) = &n.source_ref {
                        e["source_ref"] = Value::String(r.clone());
                    }
                    e
                })
                .collect();
            obj.insert(keys[c.index()].clone(), Value::Array(entries));
        }
        serde_json::to_string_pretty(&Value::Object(obj)).expect("selection json")
    }
}

/// Normalization applied before JSON parsing:
/// 1. trim surrounding whitespace;
/// 2. if a ``` fence is present, keep the first fenced block (minus an
///    optional language tag);
/// 3. keep the span from the first `{` to the last `}`.
pub fn extract_json(reply: &str) -> Option<&str> {
    let mut s = reply.trim();
    if let Some(start) = s.find("```") {
        let after = &s[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let lang = after[..body_start].trim();
        let body = if lang.is_empty() || lang.chars().all(|c| c.is_ascii_alphanumeric()) {
            &after[body_start..]
        } else {
            after
        };
        s = match body.find("```") {
            Some(end) => &body[..end],
            None => body,
        };
    }
    let open = s.find('{')?;
    let close = s.rfind('}')?;
    (close > open).then(|| &s[open..=close])
}

fn says_no(v: &str) -> bool {
    let t = v.trim().trim_matches(|c: char| c == '.' || c == '!' || c == '"' || c.is_whitespace()).to_lowercase();
    matches!(t.as_str(), "no" | "none" | "n/a")
}

fn is_no(v: &str) -> bool {
    v.trim().is_empty() || says_no(v)
}

fn text_field<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a str> {
    names
        .iter()
        .find_map(|n| obj.get(*n).and_then(Value::as_str))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn parse_entry(v: &Value) -> std::result::Result<SelectedNews, String> {
    let obj = v.as_object().ok_or("entry is not an object")?;
    let news = text_field(obj, &["news", "title", "summary"]).ok_or("entry without news text")?;
    let rationality = text_field(obj, &["rationality", "rationale", "reasoning"]).ok_or("entry without rationality")?;
    let time_text = text_field(obj, &["time", "date"]).ok_or("entry without time")?;
    let time = timefmt::parse_timestamp(time_text).ok_or_else(|| format!("unparseable time {time_text:?}"))?;
    Ok(SelectedNews {
        news: news.to_string(),
        region: text_field(obj, &["region"]).unwrap_or_default().to_string(),
        time,
        rationality: rationality.to_string(),
        source_ref: text_field(obj, &["source_ref"]).map(str::to_string),
    })
}

/// Parse a reasoning-agent reply. A bare "no" is an empty selection; a
/// category value of "no" (or null) is an empty category.
pub fn parse_selection(reply: &str) -> std::result::Result<SelectionResult, String> {
    if says_no(reply) {
        return Ok(SelectionResult::default());
    }
    let json = extract_json(reply).ok_or("no JSON object in reply")?;
    let value: Value = serde_json::from_str(json).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("reply JSON is not an object")?;
    let mut out = SelectionResult::default();
    let mut recognized = 0;
    for (key, v) in obj {
        let Some(cat) = EffectCategory::from_key(key) else { continue };
        recognized += 1;
        let entries = match v {
            Value::Null => Vec::new(),
            Value::String(s) if is_no(s) => Vec::new(),
            Value::Array(items) => items
                .iter()
                .filter(|i| !matches!(i, Value::String(s) if is_no(s)))
                .map(parse_entry)
                .collect::<std::result::Result<_, _>>()?,
            Value::Object(_) => vec![parse_entry(v)?],
            other => return Err(format!("category {key:?} holds {other}")),
        };
        out.get_mut(cat).extend(entries);
    }
    if recognized == 0 {
        return Err("no effect category keys in reply".into());
    }
    Ok(out)
}

fn normalize(s: &str) -> String {
    s.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Share of the candidate text's tokens present in the selection text.
fn overlap(selection: &str, candidate: &str) -> f64 {
    let sel: std::collections::HashSet<&str> = selection.split(' ').collect();
    let cand: Vec<&str> = candidate.split(' ').filter(|t| !t.is_empty()).collect();
    if cand.is_empty() {
        return 0.0;
    }
    cand.iter().filter(|t| sel.contains(*t)).count() as f64 / cand.len() as f64
}

/// Minimum token overlap for a fuzzy back-link.
pub const SOURCE_MATCH_THRESHOLD: f64 = 0.6;

/// Best candidate for a selected entry: normalized title or summary
/// containment in either direction, else token overlap ≥ the threshold.
pub fn match_source<'a>(selected: &str, candidates: &[&'a NewsItem]) -> Option<&'a NewsItem> {
    let sel = normalize(selected);
    if sel.is_empty() {
        return None;
    }
    let mut best: Option<(f64, &NewsItem)> = None;
    for &c in candidates {
        let texts = std::iter::once(c.title.as_str()).chain(c.summary.as_deref());
        let score = texts
            .map(|t| {
                let t = normalize(t);
                if !t.is_empty() && (sel.contains(&t) || t.contains(&sel)) {
                    2.0
                } else {
                    overlap(&sel, &t)
                }
            })
            .fold(0.0, f64::max);
        if score >= SOURCE_MATCH_THRESHOLD && best.is_none_or(|(b, _)| score > b) {
            best = Some((score, c));
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningOutcome {
    pub selection: SelectionResult,
    pub retry_count: u32,
    pub raw_reply: String,
}

/// Reasoning agent: one conversation of three prompts per task, with
/// repair re-asks on unparseable replies.
pub struct ReasoningAgent<'a> {
    pub client: &'a AgentClient,
    pub profile: &'a DomainProfile,
    pub zone: FixedOffset,
}

impl ReasoningAgent<'_> {
    pub fn bundle(&self, logic: &ReasoningLogic, task: &ForecastTask, candidates: &[NewsItem]) -> Result<PromptBundle> {
        let date = task.forecast_start.with_timezone(&self.zone).date_naive();
        Ok(build_reasoning_prompts(self.profile, logic, date, candidates, &self.profile.schema())?)
    }

    pub fn run(
        &self,
        logic: &ReasoningLogic,
        task: &ForecastTask,
        candidates: &CandidateSet,
        corpus: &NewsCorpus,
    ) -> Result<ReasoningOutcome> {
        let items: Vec<NewsItem> = candidates.items.iter().filter_map(|id| corpus.get(id).cloned()).collect();
        let mut bundle = self.bundle(logic, task, &items)?;
        let mut retries = 0;
        loop {
            let reply = self.client.send(&bundle)?;
            match parse_selection(&reply) {
                Ok(mut selection) => {
                    let refs: Vec<&NewsItem> = items.iter().collect();
                    for c in EffectCategory::ALL {
                        for entry in selection.get_mut(c) {
                            if entry.source_ref.is_none() {
                                entry.source_ref = match_source(&entry.news, &refs).map(|n| n.id.clone());
                            }
                        }
                    }
                    return Ok(ReasoningOutcome { selection, retry_count: retries, raw_reply: reply });
                }
                Err(reason) if retries < self.client.max_retries() => {
                    log::debug!("task {}: selection reply rejected ({reason}); re-asking", task.id);
                    retries += 1;
                    bundle = bundle.continued(&reply, [Message::user(REPAIR_INSTRUCTION)]);
                }
                Err(reason) => return Err(AgentError::Parse { raw: reply, reason, retries }),
            }
        }
    }
}
