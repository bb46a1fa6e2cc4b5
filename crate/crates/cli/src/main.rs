mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newscast::forecast::BackendKind;
use newscast::pipeline::PipelineError;
use newscast::prompt::PromptMode;

/// News-conditioned time series forecasting pipeline.
#[derive(Debug, Parser)]
#[command(name = "newscast", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    /// Use one prompt mode for every iteration.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<PromptMode>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    /// Refuse every network request.
    #[arg(long, global = true)]
    pub offline: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the configured inputs and print record counts.
    Ingest(IngestArgs),
    /// Candidate news per forecast window, as line-json.
    Pair(OutputArgs),
    /// Reasoning-agent selections per window, as line-json.
    Select(LogicArgs),
    /// Instruction/input/output examples over every window.
    BuildDataset(LogicArgs),
    /// Run the iterative loop (or a prompt-mode ablation) into a new run directory.
    Run(RunArgs),
    /// Forecast every window under one mode; windows as line-json.
    Forecast(LogicArgs),
    /// Metric table and curve data for a completed run directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub news: Option<PathBuf>,
    #[arg(long)]
    pub supplementary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LogicArgs {
    /// Selection logic text; defaults to the configured initial logic.
    #[arg(long)]
    pub logic: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Score all four prompt modes on one validation split instead of looping.
    #[arg(long)]
    pub ablation: bool,
    #[arg(long)]
    pub logic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Completed run directory.
    pub run: PathBuf,
    /// Where to write metrics.txt, metrics.csv and curves.csv (default: the run directory).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<PromptMode, String> {
    s.parse().map_err(|e| format!("{e}; expected one of {}", mode_names()))
}

fn mode_names() -> String {
    PromptMode::ALL.map(|m| m.name()).join(", ")
}

pub const EXIT_INPUT: u8 = 3;
pub const EXIT_STAGE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::Stage { .. }) => EXIT_STAGE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["newscast", "--mode", "numeric_only", "--backend", "mock", "run", "--ablation"]).unwrap();
        assert_eq!(cli.global.mode, Some(PromptMode::NumericOnly));
        assert_eq!(cli.global.backend, Some(BackendKind::Mock));
        assert!(matches!(cli.command, Command::Run(RunArgs { ablation: true, .. })));
        let err = parse_mode("sideways").unwrap_err();
        assert!(err.contains("textual_filtered_news"));
    }

    #[test]
    fn stage_errors_map_to_their_code() {
        let stage = anyhow::Error::from(PipelineError::Stage {
            stage: newscast::pipeline::Stage::Forecast,
            message: "x".into(),
        });
        assert_eq!(exit_code(&stage), EXIT_STAGE);
        assert_eq!(exit_code(&anyhow::anyhow!("bad file")), EXIT_INPUT);
        assert_eq!(exit_code(&anyhow::Error::from(PipelineError::Config("c".into())).context("loading")), EXIT_INPUT);
    }
}
