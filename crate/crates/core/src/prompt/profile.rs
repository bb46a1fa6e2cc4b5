use serde::{Deserialize, Serialize};

use crate::series::Domain;

/// Per-domain wording and window defaults for every prompt family.
///
/// Strings are plain text except `evaluation_subject`, which may contain
/// `{{region}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainProfile {
    pub domain: Domain,
    /// Noun used in "the historical {noun} data".
    pub series_noun: String,
    /// What is predicted, e.g. "load consumption".
    pub target_phrase: String,
    /// Thing named in the selection JSON keys, e.g. "Electricity Demand".
    pub effect_subject: String,
    /// Region list shown to the reasoning agent, e.g. "NSW/VIC/QLD".
    pub region_list: String,
    pub evaluation_subject: String,
    #[serde(default)]
    pub evaluation_note: Option<String>,
    /// Object of "conclude several new prediction logic of …".
    pub logic_subject: String,
    /// Object of "the news selection logic that affects …".
    pub consolidation_subject: String,
    #[serde(default)]
    pub seed_logic: Option<String>,
    /// Selection output exemplar; generated from `effect_subject` when absent.
    #[serde(default)]
    pub schema_example: Option<String>,
    pub input_len: usize,
    pub horizon: usize,
    pub granularity_minutes: i64,
    #[serde(default)]
    pub regions: Vec<String>,
}

const ELECTRICITY_SCHEMA: &str = include_str!("../../templates/selection_schema_electricity.json");

impl DomainProfile {
    /// Built-in profile for a registered domain.
    pub fn builtin(domain: Domain) -> Option<Self> {
        let s = |v: &str| v.to_string();
        let profile = match domain {
            Domain::Electricity => Self {
                domain,
                series_noun: s("load"),
                target_phrase: s("load consumption"),
                effect_subject: s("Electricity Demand"),
                region_list: s("NSW/VIC/TSA/QLD/SA/WA"),
                evaluation_subject: s("the electricity load of {{region}}"),
                evaluation_note: None,
                logic_subject: s("the half-hourly regional electricity demand"),
                consolidation_subject: s("Australia's region-level electricity demand"),
                seed_logic: Some(s(super::template::source(include_str!("../../templates/seed/electricity.txt")))),
                schema_example: Some(s(super::template::source(ELECTRICITY_SCHEMA))),
                input_len: 48,
                horizon: 48,
                granularity_minutes: 30,
                regions: ["NSW", "VIC", "QLD", "SA", "WA", "TAS"].map(s).to_vec(),
            },
            Domain::Exchange => Self {
                domain,
                series_noun: s("exchange rate"),
                target_phrase: s("exchange rate"),
                effect_subject: s("Exchange Rate"),
                region_list: s("Australia/United States/International"),
                evaluation_subject: s("the future exchange rate of {{region}}"),
                evaluation_note: Some(s("The base is USD.")),
                logic_subject: s("the daily AUD exchange rate"),
                consolidation_subject: s("the Australian dollar exchange rate"),
                seed_logic: Some(s(super::template::source(include_str!("../../templates/seed/exchange.txt")))),
                schema_example: None,
                input_len: 7,
                horizon: 7,
                granularity_minutes: 24 * 60,
                regions: ["Australia", "United States"].map(s).to_vec(),
            },
            Domain::Traffic => Self {
                domain,
                series_noun: s("traffic"),
                target_phrase: s("traffic volume"),
                effect_subject: s("Traffic Volume"),
                region_list: s("California, USA"),
                evaluation_subject: s("the traffic volume of {{region}}"),
                evaluation_note: None,
                logic_subject: s("the hourly traffic volume"),
                consolidation_subject: s("the traffic volume in California"),
                seed_logic: Some(s(super::template::source(include_str!("../../templates/seed/traffic.txt")))),
                schema_example: None,
                input_len: 24,
                horizon: 24,
                granularity_minutes: 60,
                regions: vec![s("California, USA")],
            },
            Domain::Bitcoin => Self {
                domain,
                series_noun: s("Bitcoin price"),
                target_phrase: s("Bitcoin price"),
                effect_subject: s("Bitcoin Price"),
                region_list: s("Global"),
                evaluation_subject: s("the future Bitcoin price"),
                evaluation_note: Some(s("The base is USD.")),
                logic_subject: s("the daily Bitcoin price"),
                consolidation_subject: s("the Bitcoin price"),
                seed_logic: Some(s(super::template::source(include_str!("../../templates/seed/bitcoin.txt")))),
                schema_example: None,
                input_len: 7,
                horizon: 7,
                granularity_minutes: 24 * 60,
                regions: vec![s("Global")],
            },
            Domain::Custom => return None,
        };
        Some(profile)
    }

    pub fn category_keys(&self) -> [String; 3] {
        let subject = &self.effect_subject;
        [
            format!("Long-Term Effect on Future {subject}"),
            format!("Short-Term Effect on Future {subject}"),
            format!("Real-Time Direct Effect on Today's {subject}"),
        ]
    }

    /// JSON exemplar shown with the candidate news.
    pub fn schema(&self) -> String {
        if let Some(s) = &self.schema_example {
            return s.clone();
        }
        let entry = serde_json::json!([{
            "news": "One-sentence summary of the news.",
            "region": self.regions.first().map(String::as_str).unwrap_or("region"),
            "time": "YYYY-MM-DD HH:MM:SS",
            "rationality": "Why this news affects the series in this way."
        }]);
        let mut obj = serde_json::Map::new();
        for key in self.category_keys() {
            obj.insert(key, entry.clone());
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("static json")
    }
}
