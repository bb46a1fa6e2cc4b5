//! Synthetic scenarios: a periodic series with news-driven impacts, the
//! matching oracle model, and agent doubles that know the ground truth.

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::agent::{ChatModel, Result as AgentResult};
use crate::corpus::NewsItem;
use crate::forecast::{OracleEffect, OracleModel};
use crate::prompt::{DomainProfile, PromptBundle, Purpose, Role};
use crate::series::{Domain, ForecastTask};
use crate::timefmt;

/// Relevant topics: (keyword, headline). The keyword is what a logic must
/// mention for the scenario agent to select the news.
const TOPICS: [(&str, &str); 6] = [
    ("heatwave", "Heatwave warning issued as temperatures climb"),
    ("grid outage", "Grid outage forces emergency load shifting"),
    ("industrial strike", "Industrial strike halts major plants"),
    ("cold snap", "Cold snap brings freezing nights"),
    ("stadium event", "Stadium event draws record crowds"),
    ("fuel shortage", "Fuel shortage disrupts transport"),
];

const DISTRACTORS: [&str; 6] = [
    "Celebrity couple announces engagement",
    "Film festival unveils its programme",
    "Fashion week opens with bold designs",
    "Football club confirms star transfer",
    "Smartphone maker teases new model",
    "Cooking show crowns a new champion",
];

static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[ref N\d+\]").unwrap());
static LOGIC_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?s)"""(.*?)""""#).unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    #[serde(default = "ScenarioParams::default_region")]
    pub region: String,
    #[serde(default = "ScenarioParams::default_domain")]
    pub domain: Domain,
    #[serde(default = "ScenarioParams::default_granularity")]
    pub granularity_minutes: i64,
    #[serde(default = "ScenarioParams::default_days")]
    pub days: usize,
    #[serde(default = "ScenarioParams::default_news")]
    pub news_count: usize,
    /// Share of news that carries no impact.
    #[serde(default = "ScenarioParams::default_ratio")]
    pub distractor_ratio: f64,
    #[serde(default = "ScenarioParams::default_min")]
    pub magnitude_min: f64,
    #[serde(default = "ScenarioParams::default_max")]
    pub magnitude_max: f64,
    /// Whole days each impact lasts.
    #[serde(default = "ScenarioParams::default_impact_days")]
    pub impact_days: usize,
    #[serde(default = "ScenarioParams::default_level")]
    pub level: f64,
    #[serde(default = "ScenarioParams::default_amplitude")]
    pub amplitude: f64,
    /// Half-width of the uniform additive noise, in series units.
    #[serde(default = "ScenarioParams::default_noise")]
    pub noise: f64,
    /// Relevant topics in use (at most 6); impacts cycle through them.
    #[serde(default = "ScenarioParams::default_topics")]
    pub topics: usize,
    /// Topics the initial logic knows; the rest are withheld. Defaults to all.
    #[serde(default)]
    pub known_topics: Option<usize>,
}

impl ScenarioParams {
    fn default_region() -> String {
        "NSW".into()
    }
    fn default_domain() -> Domain {
        Domain::Electricity
    }
    fn default_granularity() -> i64 {
        30
    }
    fn default_days() -> usize {
        30
    }
    fn default_news() -> usize {
        100
    }
    fn default_ratio() -> f64 {
        0.9
    }
    fn default_min() -> f64 {
        0.1
    }
    fn default_max() -> f64 {
        0.3
    }
    fn default_impact_days() -> usize {
        1
    }
    fn default_level() -> f64 {
        1000.0
    }
    fn default_amplitude() -> f64 {
        300.0
    }
    fn default_noise() -> f64 {
        2.0
    }
    fn default_topics() -> usize {
        5
    }

    pub fn relevant_count(&self) -> usize {
        (self.news_count as f64 * (1.0 - self.distractor_ratio)).round() as usize
    }

    pub fn known(&self) -> usize {
        self.known_topics.unwrap_or(self.topics).min(self.topics)
    }

    pub fn points_per_day(&self) -> usize {
        (24 * 60 / self.granularity_minutes) as usize
    }
}

impl Default for ScenarioParams {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

/// Hidden ground truth for one news item. Distractors carry the effect a
/// credulous model would read into them; it never touches the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsLabel {
    pub news_id: String,
    pub marker: String,
    pub relevant: bool,
    pub topic: Option<usize>,
    pub effect: OracleEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub params: ScenarioParams,
    pub seed: u64,
    pub series: TimeSeries,
    pub news: Vec<NewsItem>,
    pub labels: Vec<NewsLabel>,
    pub oracle: OracleModel,
    /// The base signal plus real impacts, without noise.
    pub clean: Vec<f64>,
}

type TimeSeries = crate::series::TimeSeries<f64>;

pub fn topic_keyword(topic: usize) -> &'static str {
    TOPICS[topic].0
}

/// A numbered selection logic naming the given topics.
pub fn logic_for_topics(topics: &[usize]) -> String {
    let mut lines = vec!["Select news that changes the target on the day it takes effect:".to_string()];
    for (i, &t) in topics.iter().enumerate() {
        lines.push(format!("{}. News about a {} shifts the series on the affected day.", i + 1, TOPICS[t].0));
    }
    lines.join("\n")
}

/// Topics whose keyword occurs in `text`, ascending.
pub fn topics_in(text: &str) -> Vec<usize> {
    let lower = text.to_lowercase();
    (0..TOPICS.len()).filter(|&t| lower.contains(TOPICS[t].0)).collect()
}

pub fn synth_scenario(params: &ScenarioParams, seed: u64) -> Result<SyntheticScenario> {
    let fail = |m: String| Err(PipelineError::Scenario(m));
    if params.granularity_minutes <= 0 || (24 * 60) % params.granularity_minutes != 0 {
        return fail(format!("granularity {} must divide a day", params.granularity_minutes));
    }
    if params.days < 2 {
        return fail("a scenario needs at least two days".into());
    }
    if !(0.0..=1.0).contains(&params.distractor_ratio) {
        return fail(format!("distractor_ratio {} outside [0, 1]", params.distractor_ratio));
    }
    if !(params.magnitude_min >= 0.0 && params.magnitude_min <= params.magnitude_max) {
        return fail("magnitude range must satisfy 0 ≤ min ≤ max".into());
    }
    if params.topics == 0 || params.topics > TOPICS.len() {
        return fail(format!("topics must be within 1..={}", TOPICS.len()));
    }
    if params.impact_days == 0 {
        return fail("impact_days must be at least 1".into());
    }
    let relevant = params.relevant_count();
    // Impacts start on day 1 or later so their news can precede them.
    let slots: Vec<usize> = (1..params.days).step_by(params.impact_days).filter(|s| s + params.impact_days <= params.days).collect();
    if relevant > slots.len() {
        return fail(format!(
            "{relevant} impacts of {} day(s) do not fit in {} days",
            params.impact_days, params.days
        ));
    }
    if params.level - params.amplitude - params.noise <= 0.0 {
        return fail("signal must stay positive".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ppd = params.points_per_day();
    let len = ppd * params.days;
    let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    let gran = Duration::minutes(params.granularity_minutes);
    let day = |k: usize| start + Duration::days(k as i64);
    let base: Vec<f64> = (0..len)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * (i % ppd) as f64 / ppd as f64;
            params.level + params.amplitude * phase.sin()
        })
        .collect();

    let mut chosen = slots.clone();
    chosen.shuffle(&mut rng);
    chosen.truncate(relevant);
    chosen.sort_unstable();

    let magnitude = |rng: &mut ChaCha8Rng| {
        if params.magnitude_max > params.magnitude_min {
            rng.random_range(params.magnitude_min..params.magnitude_max)
        } else {
            params.magnitude_min
        }
    };

    struct Draft {
        published_at: DateTime<Utc>,
        headline: String,
        relevant: bool,
        topic: Option<usize>,
        effect: (DateTime<Utc>, DateTime<Utc>, f64),
    }
    let mut drafts = Vec::with_capacity(params.news_count);
    for (k, &slot) in chosen.iter().enumerate() {
        let topic = k % params.topics;
        let onset = day(slot);
        let lead = rng.random_range(30..20 * 60);
        drafts.push(Draft {
            published_at: onset - Duration::minutes(lead),
            headline: TOPICS[topic].1.to_string(),
            relevant: true,
            topic: Some(topic),
            effect: (onset, day(slot + params.impact_days), magnitude(&mut rng)),
        });
    }
    let span_minutes = (params.days as i64 - 1) * 24 * 60;
    for _ in relevant..params.news_count {
        let published_at = day(1) + Duration::minutes(rng.random_range(0..span_minutes));
        let next_day = (published_at - start).num_days() as usize + 1;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        drafts.push(Draft {
            published_at,
            headline: DISTRACTORS[rng.random_range(0..DISTRACTORS.len())].to_string(),
            relevant: false,
            topic: None,
            effect: (day(next_day), day(next_day + 1), sign * magnitude(&mut rng)),
        });
    }
    drafts.sort_by_key(|d| d.published_at);

    let mut news = Vec::with_capacity(drafts.len());
    let mut labels = Vec::with_capacity(drafts.len());
    for (i, draft) in drafts.into_iter().enumerate() {
        let id = format!("N{:03}", i + 1);
        let marker = format!("[ref {id}]");
        news.push(NewsItem {
            id: id.clone(),
            title: format!("{} in {} {marker}", draft.headline, params.region),
            summary: None,
            content: String::new(),
            category: None,
            url: None,
            published_at: draft.published_at,
            region: params.region.clone(),
        });
        let (onset, end, magnitude) = draft.effect;
        labels.push(NewsLabel {
            news_id: id,
            marker: marker.clone(),
            relevant: draft.relevant,
            topic: draft.topic,
            effect: OracleEffect { marker, onset, end, magnitude },
        });
    }

    let oracle = OracleModel {
        start,
        granularity_minutes: params.granularity_minutes,
        base,
        effects: labels.iter().map(|l| l.effect.clone()).collect(),
    };
    let real: Vec<&OracleEffect> = labels.iter().filter(|l| l.relevant).map(|l| &l.effect).collect();
    let clean = oracle.generate(0..len, &real);
    let values: Vec<f64> = clean
        .iter()
        .map(|v| if params.noise > 0.0 { v + rng.random_range(-params.noise..params.noise) } else { *v })
        .collect();
    let series = TimeSeries::new(format!("synthetic-{seed}"), params.domain, params.region.clone(), gran, start, values)
        .map_err(|e| PipelineError::Scenario(e.to_string()))?;
    Ok(SyntheticScenario { params: params.clone(), seed, series, news, labels, oracle, clean })
}

impl SyntheticScenario {
    pub fn relevant(&self) -> impl Iterator<Item = &NewsLabel> {
        self.labels.iter().filter(|l| l.relevant)
    }

    pub fn label(&self, news_id: &str) -> Option<&NewsLabel> {
        self.labels.iter().find(|l| l.news_id == news_id)
    }

    /// Real impact lift at series index `i`.
    pub fn lift(&self, i: usize) -> f64 {
        let t = self.oracle.timestamp(i);
        self.relevant().filter(|l| l.effect.onset <= t && t < l.effect.end).map(|l| l.effect.magnitude).sum()
    }

    pub fn is_impacted(&self, task: &ForecastTask) -> bool {
        task.target_range().any(|i| self.lift(i) != 0.0)
    }

    /// MAPE (percent) of a forecast that ignores every impact, assuming the
    /// noise is zero: impacted points contribute m/(1+m).
    pub fn analytic_withheld_mape(&self, tasks: &[ForecastTask]) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for t in tasks {
            for i in t.target_range() {
                let m = self.lift(i);
                sum += (m / (1.0 + m)).abs();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            100.0 * sum / n as f64
        }
    }

    /// Bound on how far noise moves a point's absolute percentage error.
    pub fn noise_tolerance_pct(&self) -> f64 {
        let floor = self.clean.iter().cloned().fold(f64::INFINITY, f64::min) - self.params.noise;
        100.0 * 2.0 * self.params.noise / floor
    }

    pub fn initial_logic(&self) -> String {
        logic_for_topics(&(0..self.params.known()).collect::<Vec<_>>())
    }
}

/// Agent double for synthetic runs. It selects exactly the candidates whose
/// topic the current logic names, reports relevant news that the prediction
/// did not use, and on each review reveals the first withheld topic the
/// latest logic lacks.
pub struct ScenarioAgent {
    keys: [String; 3],
    labels: HashMap<String, NewsLabel>,
    titles: HashMap<String, NewsItem>,
    known: Vec<usize>,
    topics: usize,
    last_logic: Mutex<String>,
}

impl ScenarioAgent {
    pub fn new(scenario: &SyntheticScenario, profile: &DomainProfile) -> Self {
        Self {
            keys: profile.category_keys(),
            labels: scenario.labels.iter().map(|l| (l.marker.clone(), l.clone())).collect(),
            titles: scenario.news.iter().map(|n| (format!("[ref {}]", n.id), n.clone())).collect(),
            known: (0..scenario.params.known()).collect(),
            topics: scenario.params.topics,
            last_logic: Mutex::new(String::new()),
        }
    }

    fn markers<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let mut seen = Vec::new();
        for m in MARKER.find_iter(text) {
            if !seen.contains(&m.as_str()) {
                seen.push(m.as_str());
            }
        }
        seen
    }

    fn select(&self, bundle: &PromptBundle) -> String {
        let logic = bundle
            .messages
            .iter()
            .find_map(|m| LOGIC_BLOCK.captures(&m.content).map(|c| c[1].to_string()))
            .unwrap_or_default();
        let topics = topics_in(&logic);
        *self.last_logic.lock().expect("logic lock") = logic;
        let news_msg = bundle.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
        let picked: Vec<serde_json::Value> = self
            .markers(news_msg)
            .into_iter()
            .filter_map(|m| {
                let label = self.labels.get(m)?;
                let topic = label.topic.filter(|t| label.relevant && topics.contains(t))?;
                let item = &self.titles[m];
                Some(serde_json::json!({
                    "news": item.title,
                    "region": item.region,
                    "time": timefmt::news_time(&item.published_at),
                    "rationality": format!("A {} moves the series on the day it takes effect.", TOPICS[topic].0),
                }))
            })
            .collect();
        let mut out = serde_json::Map::new();
        out.insert(self.keys[0].clone(), serde_json::Value::Array(vec![]));
        out.insert(self.keys[1].clone(), serde_json::Value::Array(vec![]));
        out.insert(self.keys[2].clone(), serde_json::Value::Array(picked));
        serde_json::Value::Object(out).to_string()
    }

    fn missed(&self, bundle: &PromptBundle) -> String {
        let text = bundle.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        let (used, all) = text.split_once("Here are all the news").unwrap_or(("", text));
        let used = self.markers(used);
        let lines: Vec<String> = self
            .markers(all)
            .into_iter()
            .filter(|m| !used.contains(m) && self.labels.get(*m).is_some_and(|l| l.relevant))
            .map(|m| {
                let item = &self.titles[m];
                let topic = self.labels[m].topic.map(topic_keyword).unwrap_or("event");
                format!(
                    "The missed news is {}, occurred at {}, the possible reasoning is a {topic} changes the series that day.",
                    item.title,
                    timefmt::news_time(&item.published_at)
                )
            })
            .collect();
        if lines.is_empty() {
            "There is no missed news.".into()
        } else {
            lines.join("\n")
        }
    }

    fn reveal(&self) -> String {
        let logic = self.last_logic.lock().expect("logic lock").clone();
        let present = topics_in(&logic);
        match (0..self.topics).find(|t| !self.known.contains(t) && !present.contains(t)) {
            Some(t) => format!("News about a {} shifts the series on the affected day.", TOPICS[t].0),
            None => String::new(),
        }
    }
}

impl ChatModel for ScenarioAgent {
    fn complete(&self, bundle: &PromptBundle) -> AgentResult<String> {
        Ok(match bundle.purpose {
            Purpose::Reasoning => self.select(bundle),
            Purpose::Evaluation if bundle.messages.iter().any(|m| m.role == Role::Assistant) => self.reveal(),
            Purpose::Evaluation => self.missed(bundle),
            Purpose::Consolidation => logic_for_topics(&topics_in(&bundle.text())),
            Purpose::LogicGeneration => logic_for_topics(&self.known),
            Purpose::Forecast => String::new(),
        })
    }
}

/// Agent double for real data without an endpoint: selects nothing, finds
/// nothing missed, and keeps the logic as it is.
pub struct QuietAgent {
    keys: [String; 3],
}

impl QuietAgent {
    pub fn new(profile: &DomainProfile) -> Self {
        Self { keys: profile.category_keys() }
    }
}

impl ChatModel for QuietAgent {
    fn complete(&self, bundle: &PromptBundle) -> AgentResult<String> {
        Ok(match bundle.purpose {
            Purpose::Reasoning => {
                let obj: serde_json::Map<_, _> =
                    self.keys.iter().map(|k| (k.clone(), serde_json::Value::Array(vec![]))).collect();
                serde_json::Value::Object(obj).to_string()
            }
            Purpose::Evaluation if bundle.messages.iter().any(|m| m.role == Role::Assistant) => String::new(),
            Purpose::Evaluation => "There is no missed news.".into(),
            Purpose::Consolidation => {
                let last = bundle.messages.last().map(|m| m.content.as_str()).unwrap_or("");
                last.split_once("adjust and improve:").map(|(_, c)| c.trim().to_string()).unwrap_or_default()
            }
            Purpose::LogicGeneration => "1. Select news that directly changes the target series.".into(),
            Purpose::Forecast => String::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ReasoningLogic;
    use crate::series::make_windows;

    #[test]
    fn counts_follow_ratio() {
        let p = ScenarioParams { days: 60, ..ScenarioParams::default() };
        let s = synth_scenario(&p, 1).unwrap();
        assert_eq!(s.news.len(), 100);
        assert_eq!(s.relevant().count(), 10);
        assert_eq!(s.labels.iter().filter(|l| !l.relevant).count(), 90);
    }

    #[test]
    fn deterministic_under_seed() {
        let p = ScenarioParams::default();
        assert_eq!(synth_scenario(&p, 7).unwrap(), synth_scenario(&p, 7).unwrap());
        assert_ne!(synth_scenario(&p, 7).unwrap().series, synth_scenario(&p, 8).unwrap().series);
    }

    #[test]
    fn relevant_news_precedes_onset_and_distractors_do_not_move_series() {
        let p = ScenarioParams::default();
        for seed in 0..5 {
            let s = synth_scenario(&p, seed).unwrap();
            for (n, l) in s.news.iter().zip(&s.labels) {
                if l.relevant {
                    assert!(n.published_at < l.effect.onset);
                }
            }
            // Series minus noise equals base times one plus real lift.
            for i in 0..s.series.len() {
                let expect = s.oracle.base[i] * (1.0 + s.lift(i));
                assert!((s.series.values()[i] - expect).abs() <= p.noise);
            }
        }
    }

    #[test]
    fn zero_impacts_is_pure_periodic() {
        let p = ScenarioParams { distractor_ratio: 1.0, ..ScenarioParams::default() };
        let s = synth_scenario(&p, 3).unwrap();
        assert_eq!(s.relevant().count(), 0);
        assert!(s.clean.iter().zip(&s.oracle.base).all(|(a, b)| a == b));
    }

    #[test]
    fn impossible_params() {
        let mut p = ScenarioParams { days: 5, news_count: 10, distractor_ratio: 0.0, ..ScenarioParams::default() };
        assert!(matches!(synth_scenario(&p, 0), Err(PipelineError::Scenario(_))));
        p.impact_days = 10;
        p.news_count = 1;
        assert!(synth_scenario(&p, 0).is_err());
    }

    #[test]
    fn agent_selects_known_topics_only() {
        let p = ScenarioParams { known_topics: Some(1), ..ScenarioParams::default() };
        let s = synth_scenario(&p, 2).unwrap();
        let profile = DomainProfile::builtin(Domain::Electricity).unwrap();
        let agent = ScenarioAgent::new(&s, &profile);
        let logic = ReasoningLogic::initial(s.initial_logic(), crate::agent::Provenance::AgentGenerated).unwrap();
        let tasks = make_windows(&s.series, 48, 48, 48).unwrap();
        let date = tasks[0].forecast_start.date_naive();
        let bundle = crate::prompt::build_reasoning_prompts(&profile, &logic, date, &s.news, &profile.schema()).unwrap();
        let reply = agent.complete(&bundle).unwrap();
        let sel = crate::agent::parse_selection(&reply).unwrap();
        let expect = s.relevant().filter(|l| l.topic == Some(0)).count();
        assert_eq!(sel.real_time.len(), expect);
        assert_eq!(agent.reveal(), format!("News about a {} shifts the series on the affected day.", topic_keyword(1)));
    }
}
