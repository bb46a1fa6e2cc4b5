#![allow(dead_code)]

use std::path::PathBuf;

use chrono::{Duration, FixedOffset, NaiveDate, TimeZone, Utc};
use newscast::corpus::{render_supplementary, Fact, SupplementaryKind, SupplementaryRecord};
use newscast::prompt::NewsSentence;
use newscast::{Domain, ForecastTask, TimeSeries};

pub fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Strip the "..." elision marks around a fixture excerpt.
pub fn elided_core(s: &str) -> &str {
    s.trim_start_matches("The historical load data is: ").trim_matches('.').trim_matches(',')
}

pub const HISTORY_EXCERPT: [f64; 6] = [7015.7, 6875.1, 6634.6, 6334.6, 6134.7, 6007.9];
pub const TARGET_EXCERPT: [f64; 6] = [6592.6, 6467.0, 6312.3, 6066.8, 5902.9, 5795.0];

/// Two days of half-hourly NSW load whose history and target windows
/// contain the excerpts shown in the example triples.
pub fn nsw_series() -> TimeSeries {
    let mut values: Vec<f64> = (0..96).map(|i| 6000.0 + 10.0 * ((i % 48) as f64)).collect();
    values[20..26].copy_from_slice(&HISTORY_EXCERPT);
    values[48 + 10..48 + 16].copy_from_slice(&TARGET_EXCERPT);
    let start = Utc.with_ymd_and_hms(2019, 11, 9, 0, 0, 0).unwrap();
    TimeSeries::new("nsw-demand", Domain::Electricity, "NSW", Duration::minutes(30), start, values).unwrap()
}

pub fn nsw_task(series: &TimeSeries) -> ForecastTask {
    newscast::make_windows(series, 48, 48, 48).unwrap().remove(0)
}

fn record(kind: SupplementaryKind, day: u32, facts: Vec<(&str, Fact)>) -> SupplementaryRecord {
    SupplementaryRecord {
        kind,
        date: NaiveDate::from_ymd_opt(2019, 11, day).unwrap(),
        region: "NSW".into(),
        payload: facts.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

pub fn nsw_supplementary() -> Vec<SupplementaryRecord> {
    let cal = |day| {
        record(
            SupplementaryKind::Calendar,
            day,
            vec![("is_weekend", Fact::Bool(true)), ("is_public_holiday", Fact::Bool(false))],
        )
    };
    let weather = |day, min, max, hum, pres| {
        record(
            SupplementaryKind::Weather,
            day,
            vec![
                ("min_temp", Fact::Number(min)),
                ("max_temp", Fact::Number(max)),
                ("humidity", Fact::Number(hum)),
                ("pressure", Fact::Number(pres)),
            ],
        )
    };
    vec![
        cal(9),
        cal(10),
        weather(9, 286.5, 297.96, 34.0, 1012.0),
        weather(10, 284.92, 301.04, 46.0, 1016.0),
    ]
}

pub fn utc() -> FixedOffset {
    FixedOffset::east_opt(0).unwrap()
}

pub fn nsw_fragments(task: &ForecastTask) -> Vec<newscast::corpus::SupplementaryFragment> {
    render_supplementary(&nsw_supplementary(), task, utc())
}

pub fn bushfire_news() -> Vec<NewsSentence> {
    vec![
        NewsSentence {
            time: Utc.with_ymd_and_hms(2019, 11, 9, 20, 20, 0).unwrap(),
            text: "The devastating bushfires in NSW lead to increased short-term electricity consumption due to emergency services' operations, resident evacuations, and heightened communication needs.".into(),
        },
        NewsSentence {
            time: Utc.with_ymd_and_hms(2019, 11, 9, 8, 51, 0).unwrap(),
            text: "The ongoing fires lead to an immediate and direct effect on today's load consumption mostly due to loss of infrastructure, increased demand from firefighting efforts, and the need for emergency communications.".into(),
        },
    ]
}

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// A loop config over a synthetic scenario: oracle backend, logic from the
/// agent, half of the windows held out.
pub fn synthetic_config(params: newscast::pipeline::ScenarioParams, seed: u64) -> newscast::pipeline::PipelineConfig {
    use newscast::forecast::{BackendKind, ForecastBackendConfig};
    let mut c = newscast::pipeline::PipelineConfig::new(params.domain);
    c.synthetic = Some(params);
    c.seed = seed;
    c.validation_fraction = 0.5;
    c.backend = ForecastBackendConfig::of_kind(BackendKind::SyntheticOracle);
    c.logic_source = newscast::agent::LogicSource::Agent;
    c
}
