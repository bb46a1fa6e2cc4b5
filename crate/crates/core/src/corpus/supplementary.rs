use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{Datelike, Duration, FixedOffset, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};
use crate::series::ForecastTask;
use crate::timefmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupplementaryKind {
    Weather,
    Calendar,
    Economic,
}

/// A named fact in a supplementary payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fact {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Fact {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Fact::Number(v) => Some(*v),
            _ => None,
        }
    }

    fn as_bool(&self) -> Option<bool> {
        match self {
            Fact::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

/// Registered payload keys per kind, in rendering order.
pub fn vocabulary(kind: SupplementaryKind) -> &'static [&'static str] {
    match kind {
        SupplementaryKind::Weather => &["min_temp", "max_temp", "humidity", "pressure", "wind_speed"],
        SupplementaryKind::Calendar => &["is_weekend", "is_public_holiday", "holiday_name"],
        SupplementaryKind::Economic => &[
            "gdp",
            "unemployment_rate",
            "cash_rate_target",
            "interest_rate",
            "inflation_rate",
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplementaryRecord {
    pub kind: SupplementaryKind,
    pub date: NaiveDate,
    pub region: String,
    pub payload: BTreeMap<String, Fact>,
}

impl SupplementaryRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let vocab = vocabulary(self.kind);
        for (key, fact) in &self.payload {
            if !vocab.contains(&key.as_str()) {
                return Err(format!("key {key:?} not registered for {:?}", self.kind));
            }
            let ok = match (self.kind, key.as_str(), fact) {
                (_, _, Fact::Number(v)) if !v.is_finite() => false,
                (SupplementaryKind::Calendar, "holiday_name", Fact::Text(_)) => true,
                (SupplementaryKind::Calendar, _, Fact::Bool(_)) => true,
                (SupplementaryKind::Calendar, _, _) => false,
                (_, _, Fact::Number(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(format!("fact {key:?} has the wrong type for {:?}", self.kind));
            }
        }
        Ok(())
    }

    fn number(&self, key: &str) -> Option<f64> {
        self.payload.get(key).and_then(Fact::as_f64)
    }
}

pub fn read_supplementary(path: &Path) -> Result<Vec<SupplementaryRecord>> {
    let file = File::open(path).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let ingest = |reason: String| CorpusError::Ingest { line: i + 1, reason };
        let record: SupplementaryRecord =
            serde_json::from_str(&line).map_err(|e| ingest(e.to_string()))?;
        record.validate().map_err(ingest)?;
        out.push(record);
    }
    Ok(out)
}

/// Where a fragment belongs relative to the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentSlot {
    HistoryStart,
    History,
    Prediction,
}

/// Rendered supplementary context for one task.
///
/// `text` is the sentence (or, for calendar facts, the clause) used by the
/// textual prompt modes; `facts` are the bare `(key, value)` pairs used by
/// the numeric mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplementaryFragment {
    pub kind: SupplementaryKind,
    pub slot: FragmentSlot,
    pub date: NaiveDate,
    pub text: String,
    pub facts: Vec<(String, String)>,
}

impl SupplementaryFragment {
    pub fn fact(&self, key: &str) -> Option<&str> {
        self.facts.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.facts.iter().map(|(_, v)| v.as_str())
    }
}

/// Dates spanned by the task, in the given local zone.
pub fn task_dates(task: &ForecastTask, zone: FixedOffset) -> (Vec<NaiveDate>, NaiveDate) {
    let first = task.history_start.with_timezone(&zone).date_naive();
    let last_point = task.forecast_start - task.granularity();
    let last = last_point.with_timezone(&zone).date_naive();
    let history = first.iter_days().take_while(|d| *d <= last).collect();
    (history, task.forecast_start.with_timezone(&zone).date_naive())
}

/// Plain rendering that keeps a trailing `.0`, e.g. `34.0`.
fn weather_number(v: f64) -> String {
    format!("{v:?}")
}

fn economic_number(v: f64) -> String {
    format!("{v}")
}

fn calendar_fragment(record: &SupplementaryRecord, slot: FragmentSlot) -> SupplementaryFragment {
    let weekend = record
        .payload
        .get("is_weekend")
        .and_then(Fact::as_bool)
        .unwrap_or(matches!(record.date.weekday(), Weekday::Sat | Weekday::Sun));
    let day_type = if weekend { "Weekend" } else { "Weekday" };
    let mut text = format!("that is {day_type}");
    let mut facts = vec![("day_type".to_string(), day_type.to_string())];
    if let Some(holiday) = record.payload.get("is_public_holiday").and_then(Fact::as_bool) {
        let phrase = if holiday { "a public holiday" } else { "not a public holiday" };
        text.push_str(&format!(", and it is {phrase}"));
        facts.push(("holiday".to_string(), phrase.to_string()));
    }
    SupplementaryFragment {
        kind: SupplementaryKind::Calendar,
        slot,
        date: record.date,
        text,
        facts,
    }
}

fn weather_fragment(record: &SupplementaryRecord, slot: FragmentSlot) -> Option<SupplementaryFragment> {
    const LABELS: &[(&str, &str)] = &[
        ("min_temp", "the minimum temperature"),
        ("max_temp", "the maximum temperature"),
        ("humidity", "the humidity"),
        ("pressure", "the pressure"),
        ("wind_speed", "the wind speed"),
    ];
    let parts: Vec<(&str, &str, String)> = LABELS
        .iter()
        .filter_map(|&(key, label)| record.number(key).map(|v| (key, label, weather_number(v))))
        .collect();
    if parts.is_empty() {
        return None;
    }
    let lead = match slot {
        FragmentSlot::Prediction => "Weather forecast of the prediction date",
        _ => "Weather of the start date",
    };
    let body = parts
        .iter()
        .map(|(_, label, v)| format!("{label} is {v}"))
        .collect::<Vec<_>>()
        .join("; ");
    Some(SupplementaryFragment {
        kind: SupplementaryKind::Weather,
        slot,
        date: record.date,
        text: format!("{lead}: {body}."),
        facts: parts.into_iter().map(|(key, _, v)| (key.to_string(), v)).collect(),
    })
}

fn economic_label(key: &str) -> &'static str {
    match key {
        "gdp" => "GDP",
        "unemployment_rate" => "Unemployment rate (unit: %)",
        "cash_rate_target" => "Cash Rate Target (unit: %)",
        "interest_rate" => "Interest rate (unit: %)",
        "inflation_rate" => "Inflation rate (unit: %)",
        _ => "indicator",
    }
}

fn economic_fragments(
    records: &[&SupplementaryRecord],
    history: &[NaiveDate],
    prediction: NaiveDate,
    history_span: Duration,
) -> Vec<SupplementaryFragment> {
    let mut regions: Vec<&str> = Vec::new();
    for r in records {
        if !regions.contains(&r.region.as_str()) {
            regions.push(&r.region);
        }
    }
    let period = timefmt::lookback_phrase(history_span);
    let mut out = Vec::new();
    for region in regions {
        let of_region: Vec<&&SupplementaryRecord> = records.iter().filter(|r| r.region == region).collect();
        for key in vocabulary(SupplementaryKind::Economic) {
            let label = economic_label(key);
            let past: Vec<String> = history
                .iter()
                .filter_map(|d| of_region.iter().find(|r| r.date == *d).and_then(|r| r.number(key)))
                .map(economic_number)
                .collect();
            if !past.is_empty() {
                out.push(SupplementaryFragment {
                    kind: SupplementaryKind::Economic,
                    slot: FragmentSlot::History,
                    date: history[0],
                    text: format!("The Daily {label} of {region} during {period} was {}.", past.join(",")),
                    facts: past.into_iter().map(|v| (key.to_string(), v)).collect(),
                });
            }
            if let Some(v) = of_region.iter().find(|r| r.date == prediction).and_then(|r| r.number(key)) {
                let v = economic_number(v);
                out.push(SupplementaryFragment {
                    kind: SupplementaryKind::Economic,
                    slot: FragmentSlot::Prediction,
                    date: prediction,
                    text: format!("The Daily {label} of {region} on the prediction date is {v}."),
                    facts: vec![(key.to_string(), v)],
                });
            }
        }
    }
    out
}

/// Render the supplementary context that applies to `task`.
///
/// Calendar and weather facts are taken for the history start date and
/// the prediction date of the task's own region; economic indicators are
/// taken for every region present, over all history dates and the
/// prediction date. Missing kinds produce no fragment.
pub fn render_supplementary(
    records: &[SupplementaryRecord],
    task: &ForecastTask,
    zone: FixedOffset,
) -> Vec<SupplementaryFragment> {
    let (history, prediction) = task_dates(task, zone);
    let Some(&start) = history.first() else {
        return Vec::new();
    };
    let local = |kind: SupplementaryKind, date: NaiveDate| {
        records
            .iter()
            .find(|r| r.kind == kind && r.date == date && r.region == task.region)
    };
    let mut out = Vec::new();
    for (date, slot) in [(start, FragmentSlot::HistoryStart), (prediction, FragmentSlot::Prediction)] {
        if let Some(r) = local(SupplementaryKind::Calendar, date) {
            out.push(calendar_fragment(r, slot));
        }
    }
    for (date, slot) in [(start, FragmentSlot::HistoryStart), (prediction, FragmentSlot::Prediction)] {
        if let Some(f) = local(SupplementaryKind::Weather, date).and_then(|r| weather_fragment(r, slot)) {
            out.push(f);
        }
    }
    let economic: Vec<&SupplementaryRecord> = records
        .iter()
        .filter(|r| r.kind == SupplementaryKind::Economic)
        .collect();
    if !economic.is_empty() {
        out.extend(economic_fragments(&economic, &history, prediction, task.history_span()));
    }
    out
}
