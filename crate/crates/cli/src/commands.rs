use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use newscast::agent::{AgentClient, ChatModel, DenyAllTransport, Endpoint, HttpTransport, ReasoningLogic, Transport};
use newscast::corpus::{ingest_news_detailed, read_supplementary, NewsFormat};
use newscast::forecast::{build_backend, emit_dataset, ForecastBackend};
use newscast::pipeline::rundir::{self, RunDir};
use newscast::pipeline::{
    curves_csv, report_ablation, synth_scenario, IterationReport, ModeResult, Pipeline, PipelineConfig,
    PipelineInputs, QuietAgent, ScenarioAgent, SyntheticScenario, WindowRecord,
};
use newscast::prompt::PromptMode;
use newscast::series::read_series;

use crate::{Cli, Command, IngestArgs, LogicArgs, OutputArgs, ReportArgs, RunArgs};

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(cli, a),
        Command::Pair(a) => pair(cli, a),
        Command::Select(a) => select(cli, a),
        Command::BuildDataset(a) => build_dataset(cli, a),
        Command::Run(a) => run(cli, a),
        Command::Forecast(a) => forecast(cli, a),
        Command::Report(a) => report(a),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli.global.config.as_deref().context("--config is required for this command")?;
    let mut config = PipelineConfig::load(path)?;
    let g = &cli.global;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(kind) = g.backend {
        config.backend.kind = kind;
    }
    if let Some(mode) = g.mode {
        config.modes = vec![mode];
    }
    if let Some(n) = g.max_iterations {
        config.max_iterations = n;
    }
    config.validate()?;
    Ok(config)
}

/// Everything a pipeline borrows, owned in one place.
struct Session {
    config: PipelineConfig,
    inputs: PipelineInputs,
    agent: AgentClient,
    backend: Box<dyn ForecastBackend>,
}

impl Session {
    fn open(cli: &Cli, run_dir: Option<&RunDir>) -> Result<Self> {
        let mut config = load_config(cli)?;
        let scenario = match &config.synthetic {
            Some(params) => Some(synth_scenario(params, config.seed)?),
            None => None,
        };
        let inputs = match &scenario {
            Some(s) => PipelineInputs::from_scenario(s),
            None => PipelineInputs::load(&config)?,
        };
        let transport: Arc<dyn Transport> =
            if cli.global.offline { Arc::new(DenyAllTransport) } else { Arc::new(HttpTransport::new()?) };
        if let Some(dir) = run_dir {
            if config.agent.endpoint != Endpoint::Replay {
                config.agent.transcript_path = Some(dir.file(rundir::TRANSCRIPT));
            }
        }
        let profile = config.profile()?;
        let mock = |s: &Option<SyntheticScenario>| -> Box<dyn ChatModel> {
            match s {
                Some(s) => Box::new(ScenarioAgent::new(s, &profile)),
                None => Box::new(QuietAgent::new(&profile)),
            }
        };
        let agent = AgentClient::from_config(&config.agent, transport.clone(), Some(mock(&scenario)))?;
        let backend = build_backend(&config.backend, transport, inputs.oracle.clone(), None)?;
        Ok(Self { config, inputs, agent, backend })
    }

    fn pipeline<'a>(&'a self, sink: Option<&'a RunDir>) -> Result<Pipeline<'a>> {
        Ok(Pipeline::new(&self.config, &self.inputs, &self.agent, self.backend.as_ref(), sink)?)
    }

    fn logic(&self, p: &Pipeline, path: Option<&Path>) -> Result<ReasoningLogic> {
        match path {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(ReasoningLogic::user_supplied(text.trim())?)
            }
            None => Ok(p.initial_logic()?),
        }
    }

    fn mode(&self) -> PromptMode {
        self.config.mode_for(1)
    }
}

fn sink(out: &OutputArgs) -> Result<Box<dyn Write>> {
    Ok(match &out.output {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn json_lines<T: serde::Serialize>(out: &mut dyn Write, rows: impl IntoIterator<Item = T>) -> Result<usize> {
    let mut n = 0;
    for row in rows {
        serde_json::to_writer(&mut *out, &row)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

fn ingest(cli: &Cli, args: &IngestArgs) -> Result<()> {
    let config = match &cli.global.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    if let Some(params) = config.as_ref().and_then(|c| c.synthetic.as_ref()) {
        let s = synth_scenario(params, config.as_ref().unwrap().seed)?;
        println!("series: 1 ({} points, synthetic)", s.series.len());
        println!("news: {} ({} relevant)", s.news.len(), s.relevant().count());
        println!("supplementary: 0");
        return Ok(());
    }
    let data = config.map(|c| c.data).unwrap_or_default();
    let series = args.series.clone().or(data.series);
    let news = args.news.clone().or(data.news);
    let supplementary = args.supplementary.clone().or(data.supplementary);
    if series.is_none() && news.is_none() && supplementary.is_none() {
        bail!("nothing to ingest: pass --series, --news or --supplementary, or a config with [data]");
    }
    if let Some(p) = series {
        let s = read_series::<f64>(&p).with_context(|| p.display().to_string())?;
        let points: usize = s.iter().map(|s| s.len()).sum();
        println!("series: {} ({points} points)", s.len());
    }
    if let Some(p) = news {
        let format = data.news_format.unwrap_or(NewsFormat::from_path(&p));
        let r = ingest_news_detailed(&p, format).with_context(|| p.display().to_string())?;
        println!("news: {} ({} duplicates dropped)", r.items.len(), r.duplicates);
    }
    if let Some(p) = supplementary {
        let r = read_supplementary(&p).with_context(|| p.display().to_string())?;
        println!("supplementary: {}", r.len());
    }
    Ok(())
}

fn pair(cli: &Cli, args: &OutputArgs) -> Result<()> {
    let s = Session::open(cli, None)?;
    let p = s.pipeline(None)?;
    let n = json_lines(&mut *sink(args)?, p.pairings())?;
    eprintln!("{n} windows paired");
    Ok(())
}

fn select(cli: &Cli, args: &LogicArgs) -> Result<()> {
    let s = Session::open(cli, None)?;
    let p = s.pipeline(None)?;
    let logic = s.logic(&p, args.logic.as_deref())?;
    let rows = p.select(&logic)?.into_iter().map(|(task_ref, selection)| {
        serde_json::json!({ "task_ref": task_ref, "counts": selection.counts(), "selection": selection })
    });
    let n = json_lines(&mut *sink(&args.output)?, rows)?;
    eprintln!("{n} windows selected with logic v{}", logic.version);
    Ok(())
}

fn build_dataset(cli: &Cli, args: &LogicArgs) -> Result<()> {
    let s = Session::open(cli, None)?;
    let p = s.pipeline(None)?;
    let mode = s.mode();
    let logic = s.logic(&p, args.logic.as_deref())?;
    let examples = p.build_dataset(&logic, mode)?;
    let mut out = sink(&args.output)?;
    emit_dataset(&examples, &mut out)?;
    out.flush()?;
    eprintln!("{} examples ({mode})", examples.len());
    Ok(())
}

fn forecast(cli: &Cli, args: &LogicArgs) -> Result<()> {
    let s = Session::open(cli, None)?;
    let p = s.pipeline(None)?;
    let logic = s.logic(&p, args.logic.as_deref())?;
    let result = p.forecast_all(&logic, s.mode())?;
    json_lines(&mut *sink(&args.output)?, &result.windows)?;
    if let Some(m) = result.metrics {
        eprintln!("{}: rmse {:.4} mae {:.4} mape {}", result.mode, m.rmse, m.mae, fmt_opt(m.mape));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let config = load_config(cli)?;
    let command = std::env::args().collect::<Vec<_>>().join(" ");
    let dir = RunDir::create(&cli.global.out, &command, &config, &config.to_toml())?;
    let s = Session::open(cli, Some(&dir))?;
    let p = s.pipeline(Some(&dir))?;
    println!("run {} → {}", dir.run_id, dir.path().display());
    if args.ablation {
        let logic = s.logic(&p, args.logic.as_deref())?;
        let results = p.run_ablation(&logic, &PromptMode::ALL)?;
        dir.write_json(rundir::ABLATION, &results)?;
        print!("{}", report_ablation(&results)?.render());
        return Ok(());
    }
    if let Some(path) = &args.logic {
        bail!("--logic applies to --ablation; set logic_path in the config for the loop ({})", path.display());
    }
    let out = p.run_loop()?;
    print!("{}", iteration_table(&out.reports));
    println!("final logic v{}, final dataset {} examples", out.final_logic.version, out.final_dataset_size);
    Ok(())
}

fn iteration_table(reports: &[IterationReport]) -> String {
    let mut out = format!(
        "{:>9}  {:<24}{:>7}{:>9}{:>12}{:>12}{:>12}{:>12}\n",
        "iteration", "mode", "logic", "windows", "RMSE", "MSE", "MAE", "MAPE"
    );
    for r in reports {
        let m = r.metrics;
        let cell = |f: fn(&newscast::MetricReport) -> Option<f64>| m.as_ref().and_then(f);
        let _ = writeln!(
            out,
            "{:>9}  {:<24}{:>7}{:>9}{:>12}{:>12}{:>12}{:>12}",
            r.iteration,
            r.mode.name(),
            format!("v{}", r.logic_version),
            r.validation_size,
            fmt_opt(cell(|m| Some(m.rmse))),
            fmt_opt(cell(|m| Some(m.mse))),
            fmt_opt(cell(|m| Some(m.mae))),
            fmt_opt(cell(|m| m.mape)),
        );
    }
    out
}

fn iteration_csv(reports: &[IterationReport]) -> String {
    let mut out = String::from("iteration,mode,logic_version,windows,rmse,mse,mae,mape\n");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in reports {
        let m = r.metrics.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.mode.name(),
            r.logic_version,
            r.validation_size,
            opt(m.map(|m| m.rmse)),
            opt(m.map(|m| m.mse)),
            opt(m.map(|m| m.mae)),
            opt(m.and_then(|m| m.mape)),
        );
    }
    out
}

fn windows_of(results: &[ModeResult], modes: &[PromptMode]) -> Vec<WindowRecord> {
    modes
        .iter()
        .find_map(|m| results.iter().find(|r| r.mode == *m))
        .map(|r| r.windows.clone())
        .unwrap_or_default()
}

const WITH_NEWS: [PromptMode; 2] = [PromptMode::TextualFilteredNews, PromptMode::TextualUnfilteredNews];
const WITHOUT_NEWS: [PromptMode; 2] = [PromptMode::TextualNoNews, PromptMode::NumericOnly];

fn report(args: &ReportArgs) -> Result<()> {
    let dir = RunDir::open(&args.run)?;
    let (table, csv, curves) = if dir.file(rundir::ABLATION).is_file() {
        let text = fs::read_to_string(dir.file(rundir::ABLATION))?;
        let results: Vec<ModeResult> = serde_json::from_str(&text).context("ablation.json")?;
        let t = report_ablation(&results)?;
        let curves = curves_csv(&windows_of(&results, &WITH_NEWS), &windows_of(&results, &WITHOUT_NEWS));
        (t.render(), t.to_csv(), curves)
    } else {
        let reports: Vec<IterationReport> = dir.read_jsonl(rundir::REPORTS)?;
        if reports.is_empty() {
            bail!("{} holds no iteration reports or ablation results", args.run.display());
        }
        let windows: Vec<WindowRecord> = dir.read_jsonl(rundir::WINDOWS)?;
        let last = reports.last().map(|r| r.iteration).unwrap_or_default();
        let pick = |modes: &[PromptMode]| -> Vec<WindowRecord> {
            // Latest iteration that ran one of the modes.
            let it = windows.iter().filter(|w| modes.contains(&w.mode)).map(|w| w.iteration).max();
            windows.iter().filter(|w| Some(w.iteration) == it).cloned().collect()
        };
        log::debug!("report over {} iterations (last {last})", reports.len());
        (iteration_table(&reports), iteration_csv(&reports), curves_csv(&pick(&WITH_NEWS), &pick(&WITHOUT_NEWS)))
    };
    let out = args.output.clone().unwrap_or_else(|| dir.path().to_path_buf());
    fs::create_dir_all(&out)?;
    fs::write(out.join("metrics.txt"), &table)?;
    fs::write(out.join("metrics.csv"), &csv)?;
    fs::write(out.join("curves.csv"), &curves)?;
    print!("{table}");
    Ok(())
}
