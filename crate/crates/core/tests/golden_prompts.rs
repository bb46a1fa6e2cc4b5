mod common;

use chrono::{Duration, NaiveDate};
use common::*;
use newscast::agent::{parse_missed_news, parse_selection, OccurredAt, Provenance, ReasoningLogic};
use newscast::prompt::{
    build_consolidation_prompts, build_evaluation_prompts, build_forecast_example, build_reasoning_prompts,
    DomainProfile, EvaluationRequest, ExampleContext, PromptMode, TrainingExample,
};
use newscast::{Domain, FormatPolicy};

fn example(mode: PromptMode, with_news: bool) -> TrainingExample {
    let series = nsw_series();
    let task = nsw_task(&series);
    let profile = DomainProfile::builtin(Domain::Electricity).unwrap();
    let ctx = ExampleContext { profile: &profile, zone: utc(), policy: FormatPolicy::default() };
    let news = if with_news { bushfire_news() } else { Vec::new() };
    build_forecast_example(
        &task,
        task.history_values(&series),
        &nsw_fragments(&task),
        &news,
        mode,
        Some(task.target_values(&series)),
        &ctx,
    )
    .unwrap()
}

#[test]
fn textual_filtered_input_is_byte_exact() {
    let ex = example(PromptMode::TextualFilteredNews, true);
    assert_eq!(ex.input, fixture("textual_input.txt"));
    let instruction = fixture("textual_instruction.txt");
    assert!(ex.instruction.starts_with("The historical load data is: "));
    assert!(ex.instruction.contains(elided_core(&instruction)));
    assert!(ex.output.contains(elided_core(&fixture("output.txt"))));
}

#[test]
fn numeric_input_is_byte_exact() {
    let ex = example(PromptMode::NumericOnly, false);
    assert_eq!(ex.input, fixture("numeric_input.txt"));
    assert!(ex.instruction.contains(elided_core(&fixture("numeric_instruction.txt"))));
    assert!(!ex.instruction.starts_with("The historical"));
}

#[test]
fn no_news_equals_fixture_without_news_sentences() {
    let full = fixture("textual_input.txt");
    let cut = full.find("On 2019-11-09 08:51:00").unwrap();
    let expected = &full[..cut];
    assert_eq!(example(PromptMode::TextualNoNews, false).input, expected);
    assert_eq!(example(PromptMode::TextualFilteredNews, false).input, expected);
}

#[test]
fn reasoning_anchors() {
    let profile = DomainProfile::builtin(Domain::Electricity).unwrap();
    let logic = ReasoningLogic { version: 1, text: profile.seed_logic.clone().unwrap(), provenance: Provenance::DefaultSeed, parent_version: None };
    let date = NaiveDate::from_ymd_opt(2020, 6, 6).unwrap();
    let b = build_reasoning_prompts(&profile, &logic, date, &[], &profile.schema()).unwrap();
    let text = b.text();
    assert!(text.contains("The prediction date is \"2020-06-06\""));
    assert!(text.contains("If I give you all news before the prediction, based on the above positive & negative effect analysis"));
    assert!(text.contains("please choose all news that may have a long-term affect on future load consumption"));
    assert!(text.contains("Remember to only give the JSON output, including all relevant news, and make it the valid JSON format."));
    assert!(text.contains("\"Real-Time Direct Effect on Today's Electricity Demand\""));
    assert!(b.unresolved_placeholders().is_empty());
    let exemplar = parse_selection(&fixture("selection_exemplar.json")).unwrap();
    assert_eq!(exemplar.counts(), [1, 2, 2]);
}

#[test]
fn evaluation_anchors_and_background_passthrough() {
    let profile = DomainProfile::builtin(Domain::Exchange).unwrap();
    let background = fixture("evaluation_background.txt");
    let req = EvaluationRequest {
        region: "Australia",
        lookback: Duration::days(7),
        horizon: Duration::days(1),
        background: &background,
        selected_news: "[]",
        all_news: "[]",
        actual: &[0.7712],
        errors: &[0.0],
        prediction_date: NaiveDate::from_ymd_opt(2021, 1, 10).unwrap(),
        policy: FormatPolicy::Shortest,
    };
    let b = build_evaluation_prompts(&profile, &req).unwrap();
    let users: Vec<_> = b.user_messages().map(|m| m.content.clone()).collect();
    assert_eq!(users.len(), 4);
    assert!(users[0].contains("Please assess the accuracy of the predictions"));
    assert!(users[1].ends_with(&background));
    assert!(users[1].contains("The data frequency is 1 hour per point"));
    assert!(users[2].contains("Predicted values minus actual values are 0."));
    assert!(users[2].ends_with("The output format should be: The missed news is xxx, occurred at xxxx, the possible reasoning is xxxx."));
    assert!(users[3].contains("please directly conclude several new prediction logic"));
}

#[test]
fn consolidation_anchor() {
    let profile = DomainProfile::builtin(Domain::Exchange).unwrap();
    let current = ReasoningLogic::user_supplied("current").unwrap();
    let b = build_consolidation_prompts(&profile, &[fixture("logic_update_reply.txt")], &current).unwrap();
    let first = b.user_messages().next().unwrap();
    assert!(first.content.starts_with("Improve and polish this paragraph to reduce repeated content and summarize the news selection logic that affects the Australian dollar exchange rate:"));
    assert!(first.content.contains("Increased Risk Aversion"));
}

#[test]
fn missed_news_fixture() {
    let r = parse_missed_news(&fixture("missed_news_reply.txt"));
    assert_eq!(r.entries.len(), 1);
    let e = &r.entries[0];
    assert!(e.missed_news.starts_with("Brisbane’s streets have been empty"));
    assert_eq!(
        e.occurred_at,
        OccurredAt::Timestamp(chrono::TimeZone::with_ymd_and_hms(&chrono::Utc, 2021, 1, 9, 12, 59, 0).unwrap())
    );
    assert!(e.reasoning.starts_with("This news shows a potential shift"));
}
