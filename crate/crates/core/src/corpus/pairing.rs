use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::NewsItem;
use crate::series::ForecastTask;

/// Region label for news that applies everywhere.
pub const INTERNATIONAL: &str = "International";

/// Lookback used when none is configured: a week for daily (or coarser)
/// series, two days otherwise.
pub fn default_lookback(granularity: Duration) -> Duration {
    if granularity >= Duration::days(1) {
        Duration::days(7)
    } else {
        Duration::days(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRules {
    pub lookback_minutes: i64,
    pub include_international: bool,
    /// Regions accepted in addition to the task's own, e.g. "Australia"
    /// for a state-level task.
    #[serde(default)]
    pub extra_regions: Vec<String>,
}

impl PairingRules {
    pub fn new(lookback: Duration, include_international: bool) -> Self {
        Self {
            lookback_minutes: lookback.num_minutes(),
            include_international,
            extra_regions: Vec::new(),
        }
    }

    pub fn for_task(task: &ForecastTask) -> Self {
        Self::new(default_lookback(task.granularity()), true)
    }

    pub fn lookback(&self) -> Duration {
        Duration::minutes(self.lookback_minutes)
    }
}

/// News eligible for one task, by id, in publication order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub task_ref: String,
    pub items: Vec<String>,
    /// `[earliest, latest)` publication bounds used for eligibility.
    pub window: (DateTime<Utc>, DateTime<Utc>),
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }
}

fn region_parts(region: &str) -> impl Iterator<Item = String> + '_ {
    region
        .split([',', '/'])
        .map(|p| p.trim().to_lowercase())
        .filter(|p| !p.is_empty())
}

/// Whether a news region falls in the task's region set.
///
/// Regions are compared part-wise, case-insensitively, so "VIC" matches a
/// task region "VIC" and "Los Angeles, California, USA" matches
/// "California, USA".
pub fn region_matches(news_region: &str, task_region: &str, rules: &PairingRules) -> bool {
    if news_region.trim().eq_ignore_ascii_case(INTERNATIONAL) {
        return rules.include_international;
    }
    let wanted: Vec<String> = std::iter::once(task_region)
        .chain(rules.extra_regions.iter().map(String::as_str))
        .flat_map(region_parts)
        .collect();
    region_parts(news_region).any(|p| wanted.contains(&p))
}

/// Coarse eligibility by time and region: `forecast_start − lookback ≤
/// published_at < forecast_start`. An empty result is valid.
pub fn prepair(news: &[NewsItem], task: &ForecastTask, rules: &PairingRules) -> CandidateSet {
    let until = task.forecast_start;
    let from = until - rules.lookback();
    let mut eligible: Vec<&NewsItem> = news
        .iter()
        .filter(|n| n.published_at >= from && n.published_at < until)
        .filter(|n| region_matches(&n.region, &task.region, rules))
        .collect();
    eligible.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
    CandidateSet {
        task_ref: task.id.clone(),
        items: eligible.into_iter().map(|n| n.id.clone()).collect(),
        window: (from, until),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{make_windows, Domain, TimeSeries};
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn task(region: &str) -> ForecastTask {
        let start = Utc.with_ymd_and_hms(2020, 5, 30, 0, 0, 0).unwrap();
        let s = TimeSeries::new("s", Domain::Exchange, region, Duration::days(1), start, vec![1.0_f64; 14]).unwrap();
        make_windows(&s, 7, 7, 7).unwrap().remove(0)
    }

    fn item(id: &str, region: &str, at: DateTime<Utc>) -> NewsItem {
        NewsItem {
            id: id.into(),
            title: format!("title {id}"),
            summary: None,
            content: String::new(),
            category: None,
            url: None,
            published_at: at,
            region: region.into(),
        }
    }

    #[test]
    fn causality_and_region() {
        let t = task("VIC");
        assert_eq!(t.forecast_start, Utc.with_ymd_and_hms(2020, 6, 6, 0, 0, 0).unwrap());
        let news = vec![
            item("late", "VIC", Utc.with_ymd_and_hms(2020, 6, 7, 0, 0, 0).unwrap()),
            item("vic", "VIC", Utc.with_ymd_and_hms(2020, 6, 5, 9, 0, 0).unwrap()),
            item("nsw", "NSW", Utc.with_ymd_and_hms(2020, 6, 5, 9, 0, 0).unwrap()),
            item("edge", "vic", Utc.with_ymd_and_hms(2020, 6, 6, 0, 0, 0).unwrap()),
            item("old", "VIC", Utc.with_ymd_and_hms(2020, 5, 1, 0, 0, 0).unwrap()),
        ];
        let set = prepair(&news, &t, &PairingRules::new(Duration::days(7), true));
        assert_eq!(set.items, ["vic"]);
    }

    #[test]
    fn international_flag() {
        let t = task("VIC");
        let news = vec![item("i", "International", Utc.with_ymd_and_hms(2020, 6, 4, 0, 0, 0).unwrap())];
        assert_eq!(prepair(&news, &t, &PairingRules::new(Duration::days(7), true)).len(), 1);
        assert!(prepair(&news, &t, &PairingRules::new(Duration::days(7), false)).is_empty());
    }

    #[test]
    fn composite_regions() {
        let rules = PairingRules::new(Duration::days(1), false);
        assert!(region_matches("Los Angeles, California, USA", "California, USA", &rules));
        assert!(region_matches("NSW/VIC", "VIC", &rules));
        assert!(!region_matches("QLD", "VIC", &rules));
        let mut rules = rules;
        rules.extra_regions.push("Australia".into());
        assert!(region_matches("Australia", "VIC", &rules));
    }

    #[test]
    fn lookback_defaults() {
        assert_eq!(default_lookback(Duration::days(1)), Duration::days(7));
        assert_eq!(default_lookback(Duration::minutes(30)), Duration::days(2));
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<NewsItem>> {
        let regions = prop::sample::select(vec!["VIC", "NSW", "International", "vic, Australia"]);
        prop::collection::vec((-20_i64 * 24..4 * 24, regions), 0..60).prop_map(|specs| {
            let base = Utc.with_ymd_and_hms(2020, 6, 6, 0, 0, 0).unwrap();
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (hours, region))| item(&format!("n{i:03}"), region, base + Duration::hours(hours)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn never_leaks_and_is_sorted(news in corpus_strategy(), days in 1_i64..15, intl: bool) {
            let t = task("VIC");
            let set = prepair(&news, &t, &PairingRules::new(Duration::days(days), intl));
            let mut last = None;
            for id in &set.items {
                let n = news.iter().find(|n| &n.id == id).unwrap();
                prop_assert!(n.published_at < t.forecast_start);
                prop_assert!(n.published_at >= t.forecast_start - Duration::days(days));
                prop_assert!(last.is_none_or(|l| l <= n.published_at));
                last = Some(n.published_at);
            }
        }

        #[test]
        fn monotone_in_lookback(news in corpus_strategy(), a in 1_i64..10, extra in 0_i64..10) {
            let t = task("VIC");
            let small = prepair(&news, &t, &PairingRules::new(Duration::days(a), true));
            let large = prepair(&news, &t, &PairingRules::new(Duration::days(a + extra), true));
            prop_assert!(small.items.iter().all(|id| large.items.contains(id)));
        }
    }
}
