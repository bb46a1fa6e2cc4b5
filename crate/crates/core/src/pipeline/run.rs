use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rundir::{self, RunDir};
use super::scenario::SyntheticScenario;
use super::{PipelineConfig, PipelineError, Result, Stage, StageExt};
use crate::agent::{
    consolidate_logic, generate_default_logic, AgentClient, EvaluationAgent, EvaluationInput, MissedNews,
    Provenance, ReasoningAgent, ReasoningLogic, SelectionResult,
};
use crate::corpus::{
    default_lookback, ingest_news, prepair, read_supplementary, render_supplementary, CandidateSet, NewsCorpus, NewsFormat,
    NewsItem, PairingRules, SupplementaryRecord,
};
use crate::forecast::{write_dataset, BackendKind, ForecastBackend, OracleModel};
use crate::prompt::{
    build_forecast_example, cap_news, news_json, DomainProfile, ExampleContext, NewsSentence, PromptMode,
    RankedSentence, TrainingExample,
};
use crate::series::{compute_metrics, make_windows, read_series, split_tasks, ForecastTask};
use crate::{MetricReport, TimeSeries};

/// Series, news and context the loop runs over.
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub series: Vec<TimeSeries>,
    pub news: NewsCorpus,
    pub supplementary: Vec<SupplementaryRecord>,
    /// Ground truth for the synthetic-oracle backend.
    pub oracle: Option<Arc<OracleModel>>,
}

impl PipelineInputs {
    pub fn from_scenario(scenario: &SyntheticScenario) -> Self {
        Self {
            series: vec![scenario.series.clone()],
            news: NewsCorpus::new(scenario.news.clone()),
            supplementary: Vec::new(),
            oracle: Some(Arc::new(scenario.oracle.clone())),
        }
    }

    /// Files named by `config.data`.
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let series_path = config
            .data
            .series
            .as_deref()
            .ok_or_else(|| PipelineError::Config("data.series is not set".into()))?;
        let series = read_series::<f64>(series_path).at(Stage::Ingest)?;
        let news = match &config.data.news {
            Some(p) => ingest_news(p, config.data.news_format.unwrap_or(NewsFormat::from_path(p))).at(Stage::Ingest)?,
            None => Vec::new(),
        };
        let supplementary = match &config.data.supplementary {
            Some(p) => read_supplementary(p).at(Stage::Ingest)?,
            None => Vec::new(),
        };
        Ok(Self { series, news: NewsCorpus::new(news), supplementary, oracle: None })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub long_term: usize,
    pub short_term: usize,
    pub real_time: usize,
}

impl CategoryCounts {
    fn add(&mut self, s: &SelectionResult) {
        let [l, st, rt] = s.counts();
        self.long_term += l;
        self.short_term += st;
        self.real_time += rt;
    }

    pub fn total(&self) -> usize {
        self.long_term + self.short_term + self.real_time
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub mode: PromptMode,
    /// Version of the logic that drove this iteration's selection.
    pub logic_version: u32,
    pub selected_counts: CategoryCounts,
    pub dataset_size: usize,
    pub validation_size: usize,
    /// Pooled over every validation point; absent when validation is empty.
    pub metrics: Option<MetricReport>,
    pub evaluation_skipped: bool,
    pub missed_news: Vec<MissedNews>,
    /// Distinct logic updates from this iteration's reviews, one per line.
    pub updated_logic_text: String,
    /// Selected entries discarded for pointing at or after the forecast start.
    pub leakage_dropped: usize,
    pub wall_time_ms: u64,
}

impl IterationReport {
    /// The report with timing zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_ms: 0, ..self.clone() }
    }
}

/// Actual and predicted values of one validation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// 0 for ablation runs.
    pub iteration: usize,
    pub mode: PromptMode,
    pub task_ref: String,
    /// Series index of the first forecast point.
    pub start_index: usize,
    pub forecast_start: DateTime<Utc>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    /// News ids whose text reached the prompt.
    pub news_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsStamp {
    pub id: Option<String>,
    pub published_at: DateTime<Utc>,
}

/// Audit row: what was paired with and selected for one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingRecord {
    /// 0 for the final dataset and ablation runs.
    pub iteration: usize,
    pub mode: PromptMode,
    pub task_ref: String,
    pub forecast_start: DateTime<Utc>,
    pub paired: Vec<NewsStamp>,
    pub selected: Vec<NewsStamp>,
    pub dropped: usize,
}

/// Every paired or selected stamp at or after its task's forecast start.
pub fn leakage(records: &[PairingRecord]) -> Vec<(String, NewsStamp)> {
    records
        .iter()
        .flat_map(|r| {
            r.paired
                .iter()
                .chain(&r.selected)
                .filter(|s| s.published_at >= r.forecast_start)
                .map(|s| (r.task_ref.clone(), s.clone()))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LoopState {
    pub logic: ReasoningLogic,
    pub iteration: usize,
    /// Logic updates collected across iterations, in order.
    pub updates: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub reports: Vec<IterationReport>,
    pub final_logic: ReasoningLogic,
    pub final_dataset_size: usize,
    /// Initial logic and every successor, oldest first.
    pub logic_history: Vec<ReasoningLogic>,
}

/// Forecasts of one prompt mode on a fixed validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: PromptMode,
    pub tasks: Vec<String>,
    pub metrics: Option<MetricReport>,
    pub windows: Vec<WindowRecord>,
}

#[derive(Debug, Clone, Default)]
struct TaskNews {
    candidates: Vec<NewsItem>,
    selection: Option<SelectionResult>,
}

pub struct Pipeline<'a> {
    config: &'a PipelineConfig,
    profile: DomainProfile,
    inputs: &'a PipelineInputs,
    agent: &'a AgentClient,
    backend: &'a dyn ForecastBackend,
    sink: Option<&'a RunDir>,
    tasks: Vec<ForecastTask>,
    series_index: HashMap<String, usize>,
    pool: rayon::ThreadPool,
    audit: Mutex<Vec<PairingRecord>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        inputs: &'a PipelineInputs,
        agent: &'a AgentClient,
        backend: &'a dyn ForecastBackend,
        sink: Option<&'a RunDir>,
    ) -> Result<Self> {
        config.validate()?;
        let profile = config.profile()?;
        let input_len = config.input_len.unwrap_or(profile.input_len);
        let horizon = config.horizon.unwrap_or(profile.horizon);
        let stride = config.stride.unwrap_or(horizon);
        let mut tasks = Vec::new();
        let mut series_index = HashMap::new();
        for (i, s) in inputs.series.iter().enumerate() {
            if !config.regions.is_empty() && !config.regions.iter().any(|r| r.eq_ignore_ascii_case(&s.region)) {
                continue;
            }
            series_index.insert(s.id.clone(), i);
            tasks.extend(make_windows(s, input_len, horizon, stride).at(Stage::Window)?);
        }
        if tasks.is_empty() {
            return Err(PipelineError::Stage { stage: Stage::Window, message: "no series matched the configured regions".into() });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.in_flight)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(Self {
            config,
            profile,
            inputs,
            agent,
            backend,
            sink,
            tasks,
            series_index,
            pool,
            audit: Mutex::new(Vec::new()),
        })
    }

    pub fn tasks(&self) -> &[ForecastTask] {
        &self.tasks
    }

    pub fn profile(&self) -> &DomainProfile {
        &self.profile
    }

    /// Pairing audit rows gathered so far.
    pub fn audit(&self) -> Vec<PairingRecord> {
        self.audit.lock().expect("audit lock").clone()
    }

    /// Validation split for an iteration (0 for ablations).
    pub fn split(&self, iteration: usize) -> Result<(Vec<ForecastTask>, Vec<ForecastTask>)> {
        split_tasks(
            &self.tasks,
            self.config.validation_fraction,
            self.config.seed.wrapping_add(iteration as u64),
            self.config.validation_cap,
        )
        .at(Stage::Window)
    }

    fn series(&self, task: &ForecastTask) -> &TimeSeries {
        &self.inputs.series[self.series_index[&task.series_ref]]
    }

    fn ctx(&self) -> ExampleContext<'_> {
        ExampleContext { profile: &self.profile, zone: self.config.zone(), policy: self.config.format }
    }

    fn rules(&self, task: &ForecastTask) -> PairingRules {
        let lookback = self.config.lookback().unwrap_or_else(|| default_lookback(task.granularity()));
        let mut rules = PairingRules::new(lookback, self.config.include_international);
        rules.extra_regions = self.config.extra_regions.clone();
        rules
    }

    /// Pair news with each task and, in filtered mode, run the reasoning agent.
    fn gather(&self, logic: &ReasoningLogic, tasks: &[ForecastTask], mode: PromptMode, iteration: usize) -> Result<Vec<TaskNews>> {
        if !mode.includes_news() {
            return Ok(vec![TaskNews::default(); tasks.len()]);
        }
        let reasoning = ReasoningAgent { client: self.agent, profile: &self.profile, zone: self.config.zone() };
        let rows: Vec<(TaskNews, PairingRecord)> = self.pool.install(|| {
            tasks
                .par_iter()
                .map(|task| {
                    let set = prepair(self.inputs.news.items(), task, &self.rules(task));
                    let candidates: Vec<NewsItem> =
                        set.items.iter().filter_map(|id| self.inputs.news.get(id).cloned()).collect();
                    let mut dropped = 0;
                    let selection = if mode == PromptMode::TextualFilteredNews {
                        let mut s = reasoning.run(logic, task, &set, &self.inputs.news).at(Stage::Select)?.selection;
                        // The agent may cite news (or times) outside the window.
                        dropped = s.retain(|e| {
                            e.time < task.forecast_start
                                && e.source_ref
                                    .as_deref()
                                    .and_then(|id| self.inputs.news.get(id))
                                    .is_none_or(|n| n.published_at < task.forecast_start)
                        });
                        Some(s)
                    } else {
                        None
                    };
                    let stamp = |n: &NewsItem| NewsStamp { id: Some(n.id.clone()), published_at: n.published_at };
                    let selected = selection
                        .iter()
                        .flat_map(|s| s.iter())
                        .map(|(_, e)| match e.source_ref.as_deref().and_then(|id| self.inputs.news.get(id)) {
                            Some(n) => stamp(n),
                            None => NewsStamp { id: None, published_at: e.time },
                        })
                        .collect();
                    let record = PairingRecord {
                        iteration,
                        mode,
                        task_ref: task.id.clone(),
                        forecast_start: task.forecast_start,
                        paired: candidates.iter().map(stamp).collect(),
                        selected,
                        dropped,
                    };
                    Ok((TaskNews { candidates, selection }, record))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let (news, records): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        if let Some(sink) = self.sink {
            sink.append_jsonl(rundir::PAIRINGS, &records)?;
        }
        self.audit.lock().expect("audit lock").extend(records);
        Ok(news)
    }

    fn sentences(&self, news: &TaskNews, mode: PromptMode) -> (Vec<NewsSentence>, Vec<String>) {
        let ranked: Vec<(RankedSentence, Option<String>)> = match mode {
            PromptMode::TextualUnfilteredNews => news
                .candidates
                .iter()
                .map(|n| {
                    let text = match n.summary.as_deref().filter(|s| !s.trim().is_empty()) {
                        Some(s) => format!("{}. {}", n.title.trim_end_matches('.'), s),
                        None => n.title.clone(),
                    };
                    let sentence = NewsSentence { time: n.published_at, text };
                    (RankedSentence { sentence, category: None }, Some(n.id.clone()))
                })
                .collect(),
            PromptMode::TextualFilteredNews => news
                .selection
                .iter()
                .flat_map(|s| s.iter())
                .map(|(c, e)| {
                    let sentence = NewsSentence { time: e.time, text: e.news.clone() };
                    (RankedSentence { sentence, category: Some(c) }, e.source_ref.clone())
                })
                .collect(),
            _ => Vec::new(),
        };
        let refs: HashMap<String, Option<String>> =
            ranked.iter().map(|(r, id)| (r.sentence.text.clone(), id.clone())).collect();
        let kept = cap_news(ranked.into_iter().map(|(r, _)| r).collect(), self.config.news_cap);
        let ids = kept.iter().filter_map(|s| refs.get(&s.text).cloned().flatten()).collect();
        (kept, ids)
    }

    fn example(&self, task: &ForecastTask, news: &TaskNews, mode: PromptMode, with_target: bool) -> Result<(TrainingExample, Vec<String>)> {
        let series = self.series(task);
        let fragments = render_supplementary(&self.inputs.supplementary, task, self.config.zone());
        let (sentences, ids) = self.sentences(news, mode);
        let target = with_target.then(|| task.target_values(series));
        let ex = build_forecast_example(task, task.history_values(series), &fragments, &sentences, mode, target, &self.ctx())
            .at(Stage::Build)?;
        Ok((ex, ids))
    }

    fn training_set(&self, tasks: &[ForecastTask], news: &[TaskNews], mode: PromptMode) -> Result<Vec<TrainingExample>> {
        tasks.iter().zip(news).map(|(t, n)| self.example(t, n, mode, true).map(|(e, _)| e)).collect()
    }

    fn forecast(&self, tasks: &[ForecastTask], news: &[TaskNews], mode: PromptMode, iteration: usize) -> Result<Vec<WindowRecord>> {
        self.pool.install(|| {
            tasks
                .par_iter()
                .zip(news)
                .map(|(task, n)| {
                    let (ex, news_refs) = self.example(task, n, mode, false)?;
                    let history = task.history_values(self.series(task));
                    let result = self.backend.forecast(task, history, &ex).at(Stage::Forecast)?;
                    Ok(WindowRecord {
                        iteration,
                        mode,
                        task_ref: task.id.clone(),
                        start_index: task.history.end,
                        forecast_start: task.forecast_start,
                        actual: task.target_values(self.series(task)).to_vec(),
                        predicted: result.predicted,
                        news_refs,
                    })
                })
                .collect()
        })
    }

    fn pooled(windows: &[WindowRecord]) -> Result<Option<MetricReport>> {
        if windows.is_empty() {
            return Ok(None);
        }
        let actual: Vec<f64> = windows.iter().flat_map(|w| w.actual.iter().copied()).collect();
        let predicted: Vec<f64> = windows.iter().flat_map(|w| w.predicted.iter().copied()).collect();
        compute_metrics(&actual, &predicted).at(Stage::Metrics).map(Some)
    }

    fn emit(&self, examples: &[TrainingExample], iteration: usize) -> Result<Option<std::path::PathBuf>> {
        match self.sink {
            Some(sink) => {
                let path = match iteration {
                    0 => sink.file(rundir::FINAL_DATASET),
                    i => sink.dataset_path(i)?,
                };
                write_dataset(examples, &path).at(Stage::Emit)?;
                Ok(Some(path))
            }
            None => {
                crate::forecast::emit_dataset(examples, &mut std::io::sink()).at(Stage::Emit)?;
                Ok(None)
            }
        }
    }

    fn train(&self, dataset: Option<&Path>, tag: &str) -> Result<()> {
        let Some(template) = &self.config.training_hook else { return Ok(()) };
        if self.backend.kind() != BackendKind::Remote {
            return Ok(());
        }
        let Some(dataset) = dataset else {
            log::warn!("training hook skipped: no run directory to hold the dataset");
            return Ok(());
        };
        let command = template.replace("{dataset_path}", &dataset.display().to_string()).replace("{output_tag}", tag);
        log::info!("training hook: {command}");
        let status = std::process::Command::new("sh").arg("-c").arg(&command).status().at(Stage::Train)?;
        if !status.success() {
            return Err(PipelineError::Stage { stage: Stage::Train, message: format!("`{command}` exited with {status}") });
        }
        Ok(())
    }

    pub fn initial_logic(&self) -> Result<ReasoningLogic> {
        if let Some(path) = &self.config.logic_path {
            let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            return ReasoningLogic::user_supplied(text.trim()).at(Stage::Logic);
        }
        if self.config.uses_agents() {
            return generate_default_logic(self.agent, &self.profile, self.config.logic_source).at(Stage::Logic);
        }
        // No selection happens, so no agent is consulted for a logic either.
        let text = self.profile.seed_logic.clone().unwrap_or_else(|| "News selection is not used in this run.".into());
        ReasoningLogic::initial(text, Provenance::DefaultSeed).at(Stage::Logic)
    }

    pub fn run_iteration(&self, state: &mut LoopState) -> Result<IterationReport> {
        let started = Instant::now();
        let iteration = state.iteration + 1;
        let mode = self.config.mode_for(iteration);
        let (train, validation) = self.split(iteration)?;
        log::info!(
            "iteration {iteration}: mode {mode}, logic v{}, {} train / {} validation tasks",
            state.logic.version,
            train.len(),
            validation.len()
        );

        let all: Vec<ForecastTask> = train.iter().chain(&validation).cloned().collect();
        let news = self.gather(&state.logic, &all, mode, iteration)?;
        let (train_news, val_news) = news.split_at(train.len());
        let mut counts = CategoryCounts::default();
        for s in news.iter().filter_map(|n| n.selection.as_ref()) {
            counts.add(s);
        }
        let dropped = self.audit().iter().filter(|r| r.iteration == iteration).map(|r| r.dropped).sum();

        let examples = self.training_set(&train, train_news, mode)?;
        let dataset = self.emit(&examples, iteration)?;
        let tag = match self.sink {
            Some(s) => format!("{}-iter{iteration}", s.run_id),
            None => format!("iter{iteration}"),
        };
        self.train(dataset.as_deref(), &tag)?;

        let windows = self.forecast(&validation, val_news, mode, iteration)?;
        let metrics = Self::pooled(&windows)?;

        let evaluate = mode == PromptMode::TextualFilteredNews && !validation.is_empty();
        let mut missed = Vec::new();
        let mut updates: Vec<String> = Vec::new();
        if evaluate {
            let evaluator = EvaluationAgent {
                client: self.agent,
                profile: &self.profile,
                zone: self.config.zone(),
                policy: self.config.format,
            };
            let keys = self.profile.category_keys();
            let outcomes = self.pool.install(|| {
                validation
                    .par_iter()
                    .zip(val_news)
                    .zip(&windows)
                    .map(|((task, n), w)| {
                        let background = self.example(task, n, PromptMode::TextualNoNews, false)?.0.input;
                        let selected = n.selection.as_ref().map(|s| s.to_agent_json(&keys)).unwrap_or_default();
                        let input = EvaluationInput {
                            background: background.trim_end(),
                            selected_news: &selected,
                            all_news: &news_json(&n.candidates),
                            actual: &w.actual,
                            predicted: &w.predicted,
                            lookback: self.rules(task).lookback(),
                        };
                        evaluator.run(task, input).at(Stage::Evaluate)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for o in outcomes {
                missed.extend(o.report.entries);
                let text = o.updated_logic_text.trim().to_string();
                if !text.is_empty() && !updates.contains(&text) {
                    updates.push(text);
                }
            }
        } else if validation.is_empty() {
            log::warn!("iteration {iteration}: validation set is empty; evaluation skipped");
        }

        let fresh: Vec<&String> = updates.iter().filter(|u| !state.logic.text.contains(u.as_str())).collect();
        let next_text = if fresh.is_empty() {
            state.logic.text.clone()
        } else {
            let lines: Vec<&str> = fresh.iter().map(|s| s.as_str()).collect();
            format!("{}\n{}", state.logic.text, lines.join("\n"))
        };
        let report = IterationReport {
            iteration,
            mode,
            logic_version: state.logic.version,
            selected_counts: counts,
            dataset_size: examples.len(),
            validation_size: validation.len(),
            metrics,
            evaluation_skipped: !evaluate,
            missed_news: missed,
            updated_logic_text: updates.join("\n"),
            leakage_dropped: dropped,
            wall_time_ms: started.elapsed().as_millis() as u64,
        };
        state.logic = state.logic.successor(next_text, Provenance::EvaluationUpdate).at(Stage::Logic)?;
        state.updates.extend(updates);
        state.iteration = iteration;
        if let Some(sink) = self.sink {
            sink.append_jsonl(rundir::REPORTS, std::slice::from_ref(&report))?;
            sink.append_jsonl(rundir::WINDOWS, &windows)?;
        }
        Ok(report)
    }

    /// All iterations, then one consolidation and the final dataset.
    pub fn run_loop(&self) -> Result<LoopOutcome> {
        let initial = self.initial_logic()?;
        let mut history = vec![initial.clone()];
        let mut state = LoopState { logic: initial, iteration: 0, updates: Vec::new() };
        let mut reports = Vec::with_capacity(self.config.max_iterations);
        for _ in 0..self.config.max_iterations {
            reports.push(self.run_iteration(&mut state)?);
            history.push(state.logic.clone());
        }

        let final_logic = if self.config.uses_agents() {
            let updates = if state.updates.is_empty() { vec![state.logic.text.clone()] } else { state.updates.clone() };
            consolidate_logic(self.agent, &self.profile, &updates, &state.logic).at(Stage::Consolidate)?
        } else {
            state.logic.clone()
        };
        if final_logic != state.logic {
            history.push(final_logic.clone());
        }

        let mode = self.config.mode_for(self.config.max_iterations);
        let news = self.gather(&final_logic, &self.tasks, mode, 0)?;
        let examples = self.training_set(&self.tasks, &news, mode)?;
        self.emit(&examples, 0)?;
        if let Some(sink) = self.sink {
            sink.write_text(rundir::FINAL_LOGIC, &final_logic.text)?;
        }
        Ok(LoopOutcome { reports, final_logic, final_dataset_size: examples.len(), logic_history: history })
    }

    /// Candidate news per task, before any selection.
    pub fn pairings(&self) -> Vec<CandidateSet> {
        self.tasks.iter().map(|t| prepair(self.inputs.news.items(), t, &self.rules(t))).collect()
    }

    /// Reasoning-agent selections for every task, after the causality guard.
    pub fn select(&self, logic: &ReasoningLogic) -> Result<Vec<(String, SelectionResult)>> {
        let news = self.gather(logic, &self.tasks, PromptMode::TextualFilteredNews, 0)?;
        Ok(self.tasks.iter().zip(news).map(|(t, n)| (t.id.clone(), n.selection.unwrap_or_default())).collect())
    }

    /// Training examples over every task under one mode.
    pub fn build_dataset(&self, logic: &ReasoningLogic, mode: PromptMode) -> Result<Vec<TrainingExample>> {
        let news = self.gather(logic, &self.tasks, mode, 0)?;
        self.training_set(&self.tasks, &news, mode)
    }

    /// Forecast every task under one mode.
    pub fn forecast_all(&self, logic: &ReasoningLogic, mode: PromptMode) -> Result<ModeResult> {
        let news = self.gather(logic, &self.tasks, mode, 0)?;
        let windows = self.forecast(&self.tasks, &news, mode, 0)?;
        let tasks = self.tasks.iter().map(|t| t.id.clone()).collect();
        Ok(ModeResult { mode, tasks, metrics: Self::pooled(&windows)?, windows })
    }

    /// Forecast the same validation split under each mode with a fixed logic.
    pub fn run_ablation(&self, logic: &ReasoningLogic, modes: &[PromptMode]) -> Result<Vec<ModeResult>> {
        let (_, validation) = self.split(0)?;
        let ids: Vec<String> = validation.iter().map(|t| t.id.clone()).collect();
        let mut out = Vec::with_capacity(modes.len());
        for &mode in modes {
            let news = self.gather(logic, &validation, mode, 0)?;
            let windows = self.forecast(&validation, &news, mode, 0)?;
            out.push(ModeResult { mode, tasks: ids.clone(), metrics: Self::pooled(&windows)?, windows });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ScriptedChat;
    use crate::forecast::SeasonalNaive;
    use crate::pipeline::{synth_scenario, QuietAgent, ScenarioParams};
    use crate::prompt::Purpose;
    use crate::series::Domain;

    fn setup(mode: PromptMode, cap: usize) -> (PipelineConfig, PipelineInputs) {
        let scenario = synth_scenario(&ScenarioParams::default(), 5).unwrap();
        let mut config = PipelineConfig::new(Domain::Electricity);
        config.synthetic = Some(ScenarioParams::default());
        config.modes = vec![mode];
        config.validation_cap = cap;
        config.max_iterations = 2;
        (config, PipelineInputs::from_scenario(&scenario))
    }

    #[test]
    fn numeric_only_makes_no_agent_calls() {
        let (config, inputs) = setup(PromptMode::NumericOnly, 32);
        let agent = AgentClient::new(ScriptedChat::new(Vec::<String>::new()), 0);
        let backend = SeasonalNaive { period: None };
        let p = Pipeline::new(&config, &inputs, &agent, &backend, None).unwrap();
        let out = p.run_loop().unwrap();
        assert_eq!(agent.total_calls(), 0);
        assert_eq!(out.reports.len(), 2);
        assert!(out.reports.iter().all(|r| r.evaluation_skipped && r.metrics.is_some()));
        assert_eq!(out.final_dataset_size, p.tasks().len());
    }

    #[test]
    fn empty_validation_skips_evaluation() {
        let (config, inputs) = setup(PromptMode::TextualFilteredNews, 0);
        let profile = config.profile().unwrap();
        let agent = AgentClient::new(QuietAgent::new(&profile), 0);
        let backend = SeasonalNaive { period: None };
        let p = Pipeline::new(&config, &inputs, &agent, &backend, None).unwrap();
        let out = p.run_loop().unwrap();
        let r = &out.reports[0];
        assert!(r.evaluation_skipped && r.metrics.is_none() && r.validation_size == 0);
        assert_eq!(agent.calls(Purpose::Evaluation), 0);
        assert_eq!(agent.calls(Purpose::Consolidation), 1);
        assert!(out.reports[1].logic_version > out.reports[0].logic_version);
    }

    #[test]
    fn stage_tagged_failure() {
        let (config, inputs) = setup(PromptMode::TextualFilteredNews, 32);
        // Logic generation succeeds, the first reasoning reply is garbage.
        let mut config = config;
        config.logic_source = crate::agent::LogicSource::Agent;
        let agent = AgentClient::new(ScriptedChat::new(["1. logic", "not json"]), 0);
        let backend = SeasonalNaive { period: None };
        let p = Pipeline::new(&config, &inputs, &agent, &backend, None).unwrap();
        let err = p.run_loop().unwrap_err();
        assert!(matches!(err.stage_of(), Some(Stage::Select)), "{err}");
    }
}
