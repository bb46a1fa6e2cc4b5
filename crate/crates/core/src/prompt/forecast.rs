use chrono::{DateTime, FixedOffset, Utc};
use serde::{Deserialize, Serialize};

use super::profile::DomainProfile;
use super::template::{self, Vars};
use super::PromptError;
use crate::corpus::{task_dates, FragmentSlot, SupplementaryFragment, SupplementaryKind};
use crate::series::{serialize_digits, FormatPolicy, ForecastTask};
use crate::timefmt;

const NUMERIC: &str = include_str!("../../templates/forecast_numeric.tmpl");
const TEXTUAL: &str = include_str!("../../templates/forecast_textual.tmpl");
const INSTRUCTION: &str = include_str!("../../templates/forecast_instruction.tmpl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    NumericOnly,
    TextualNoNews,
    TextualUnfilteredNews,
    TextualFilteredNews,
}

impl PromptMode {
    pub const ALL: [PromptMode; 4] = [
        PromptMode::NumericOnly,
        PromptMode::TextualNoNews,
        PromptMode::TextualUnfilteredNews,
        PromptMode::TextualFilteredNews,
    ];

    pub fn includes_news(self) -> bool {
        matches!(self, PromptMode::TextualUnfilteredNews | PromptMode::TextualFilteredNews)
    }

    pub fn is_textual(self) -> bool {
        self != PromptMode::NumericOnly
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptMode::NumericOnly => "numeric_only",
            PromptMode::TextualNoNews => "textual_no_news",
            PromptMode::TextualUnfilteredNews => "textual_unfiltered_news",
            PromptMode::TextualFilteredNews => "textual_filtered_news",
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown prompt mode {s:?}"))
    }
}

impl std::fmt::Display for PromptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The instruction / input / output triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// A news item as it appears in a forecasting prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsSentence {
    pub time: DateTime<Utc>,
    pub text: String,
}

impl NewsSentence {
    pub fn render(&self) -> String {
        let text = self.text.trim();
        let end = if text.ends_with(['.', '!', '?']) { "" } else { "." };
        format!(
            "On {}, the news can change the time series fluctuation that {text}{end}",
            timefmt::news_time(&self.time)
        )
    }
}

/// Fixed inputs shared by every example of a run.
#[derive(Debug, Clone)]
pub struct ExampleContext<'a> {
    pub profile: &'a DomainProfile,
    /// Zone in which start and prediction dates are read.
    pub zone: FixedOffset,
    pub policy: FormatPolicy,
}

fn fragment(frags: &[SupplementaryFragment], kind: SupplementaryKind, slot: FragmentSlot) -> Option<&SupplementaryFragment> {
    frags.iter().find(|f| f.kind == kind && f.slot == slot)
}

fn bind_weather(vars: &mut Vars, prefix: &str, frag: Option<&SupplementaryFragment>, numeric: bool) {
    let Some(f) = frag else { return };
    if numeric {
        const CORE: [&str; 4] = ["min_temp", "max_temp", "humidity", "pressure"];
        let values: Option<Vec<&str>> = CORE.iter().map(|k| f.fact(k)).collect();
        if let Some(values) = values {
            vars.set(&format!("{prefix}_weather"), "1");
            for (k, v) in CORE.iter().zip(values) {
                vars.set(&format!("{prefix}_{k}"), v);
            }
        }
    } else {
        vars.set(&format!("{prefix}_weather"), f.text.clone());
    }
}

/// Build the training (target given) or inference (target `None`) example
/// for one task.
///
/// `history` is the task's history window; `news` is rendered in
/// chronological order regardless of the order given.
pub fn build_forecast_example(
    task: &ForecastTask,
    history: &[f64],
    supplementary: &[SupplementaryFragment],
    news: &[NewsSentence],
    mode: PromptMode,
    target: Option<&[f64]>,
    ctx: &ExampleContext,
) -> Result<TrainingExample, PromptError> {
    if !news.is_empty() && !mode.includes_news() {
        return Err(PromptError::Mode(format!("{} news sentences given to mode {mode}", news.len())));
    }
    if history.len() != task.input_len() {
        return Err(PromptError::Invalid(format!(
            "history has {} values, task {} expects {}",
            history.len(),
            task.id,
            task.input_len()
        )));
    }
    if let Some(t) = target {
        if t.len() != task.horizon {
            return Err(PromptError::Invalid(format!(
                "target has {} values, task {} horizon is {}",
                t.len(),
                task.id,
                task.horizon
            )));
        }
    }
    let digits = serialize_digits(history, ctx.policy).map_err(|e| PromptError::Invalid(e.to_string()))?;
    let output = match target {
        Some(t) => serialize_digits(t, ctx.policy).map_err(|e| PromptError::Invalid(e.to_string()))?,
        None => String::new(),
    };

    let (history_dates, prediction_date) = task_dates(task, ctx.zone);
    let start_date = history_dates.first().copied().unwrap_or(prediction_date);
    let numeric = !mode.is_textual();

    let mut vars = Vars::new();
    vars.set("region", task.region.clone())
        .set("start_date", timefmt::calendar_date(start_date))
        .set("prediction_date", timefmt::calendar_date(prediction_date));
    for (prefix, slot) in [("start", FragmentSlot::HistoryStart), ("prediction", FragmentSlot::Prediction)] {
        let cal = fragment(supplementary, SupplementaryKind::Calendar, slot);
        let text = cal.map(|f| {
            if numeric {
                f.values().collect::<Vec<_>>().join("; ")
            } else {
                f.text.clone()
            }
        });
        vars.set_opt(&format!("{prefix}_calendar"), text);
        bind_weather(&mut vars, prefix, fragment(supplementary, SupplementaryKind::Weather, slot), numeric);
    }
    let economic: Vec<&SupplementaryFragment> = supplementary
        .iter()
        .filter(|f| f.kind == SupplementaryKind::Economic)
        .collect();
    let economic = if numeric {
        economic
            .iter()
            .map(|f| f.values().collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("; ")
    } else {
        economic.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join(" ")
    };
    vars.set("economic", economic);

    let (instruction, input) = if numeric {
        let body = template::render(template::source(NUMERIC), &vars)?;
        let body = body.strip_suffix(';').unwrap_or(&body);
        (digits, format!("{body}."))
    } else {
        let p = ctx.profile;
        let mut sorted: Vec<&NewsSentence> = news.iter().collect();
        sorted.sort_by_key(|a| a.time);
        vars.set("series_noun", p.series_noun.clone())
            .set("target_phrase", p.target_phrase.clone())
            .set("horizon", timefmt::horizon_phrase(task.horizon_span()))
            .set("frequency", timefmt::duration_phrase(task.granularity()))
            .set("history_span", timefmt::duration_phrase(task.history_span()))
            .set("news", sorted.iter().map(|n| n.render()).collect::<Vec<_>>().join(" "))
            .set("digits", digits);
        (
            template::render(template::source(INSTRUCTION), &vars)?,
            template::render(template::source(TEXTUAL), &vars)?,
        )
    };
    Ok(TrainingExample { instruction, input, output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{make_windows, Domain, TimeSeries};
    use chrono::{Duration, TimeZone};

    fn setup() -> (ForecastTask, Vec<f64>, DomainProfile) {
        let start = Utc.with_ymd_and_hms(2019, 11, 9, 0, 0, 0).unwrap();
        let values: Vec<f64> = (0..96).map(|i| 5000.0 + i as f64).collect();
        let s = TimeSeries::new("nsw", Domain::Electricity, "NSW", Duration::minutes(30), start, values.clone()).unwrap();
        let task = make_windows(&s, 48, 48, 48).unwrap().remove(0);
        (task, values, DomainProfile::builtin(Domain::Electricity).unwrap())
    }

    #[test]
    fn news_in_no_news_mode_is_rejected() {
        let (task, values, profile) = setup();
        let ctx = ExampleContext { profile: &profile, zone: FixedOffset::east_opt(0).unwrap(), policy: FormatPolicy::default() };
        let news = [NewsSentence { time: task.history_start, text: "x".into() }];
        for mode in [PromptMode::NumericOnly, PromptMode::TextualNoNews] {
            let err = build_forecast_example(&task, &values[..48], &[], &news, mode, None, &ctx).unwrap_err();
            assert!(matches!(err, PromptError::Mode(_)));
        }
    }

    #[test]
    fn bare_example_shapes() {
        let (task, values, profile) = setup();
        let ctx = ExampleContext { profile: &profile, zone: FixedOffset::east_opt(0).unwrap(), policy: FormatPolicy::default() };
        let ex = build_forecast_example(&task, &values[..48], &[], &[], PromptMode::NumericOnly, Some(&values[48..]), &ctx).unwrap();
        assert_eq!(ex.input, "NSW; 2019-11-9; 2019-11-10.");
        assert!(ex.instruction.starts_with("5000.0,5001.0,"));
        assert!(ex.output.starts_with("5048.0,"));
        let ex = build_forecast_example(&task, &values[..48], &[], &[], PromptMode::TextualNoNews, None, &ctx).unwrap();
        assert!(ex.instruction.starts_with("The historical load data is: 5000.0,"));
        assert_eq!(
            ex.input,
            "Based on the historical load data, please predict the load consumption in the next day. The region for prediction is NSW. The start date of historical data was on 2019-11-9. The data frequency is 30 minutes per point. Historical data covers 1 day. The date of prediction is on 2019-11-10. "
        );
        assert!(ex.output.is_empty());
    }

    #[test]
    fn length_checks() {
        let (task, values, profile) = setup();
        let ctx = ExampleContext { profile: &profile, zone: FixedOffset::east_opt(0).unwrap(), policy: FormatPolicy::default() };
        assert!(build_forecast_example(&task, &values[..47], &[], &[], PromptMode::NumericOnly, None, &ctx).is_err());
        assert!(build_forecast_example(&task, &values[..48], &[], &[], PromptMode::NumericOnly, Some(&values[..3]), &ctx).is_err());
    }

    #[test]
    fn sentence_terminal_punctuation() {
        let t = Utc.with_ymd_and_hms(2019, 11, 9, 8, 51, 0).unwrap();
        assert_eq!(
            NewsSentence { time: t, text: "fires spread".into() }.render(),
            "On 2019-11-09 08:51:00, the news can change the time series fluctuation that fires spread."
        );
        assert!(NewsSentence { time: t, text: "Done!".into() }.render().ends_with("that Done!"));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in PromptMode::ALL {
            assert_eq!(m.name().parse::<PromptMode>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }
}
