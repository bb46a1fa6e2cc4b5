mod common;

use common::synthetic_config;
use newscast::agent::{read_transcript, AgentClient, ReplayChat};
use newscast::forecast::{read_dataset, SyntheticOracle};
use newscast::pipeline::rundir::{self, RunDir};
use newscast::pipeline::{
    synth_scenario, IterationReport, Pipeline, PipelineInputs, ScenarioAgent, ScenarioParams, WindowRecord,
};

fn params() -> ScenarioParams {
    ScenarioParams { days: 14, news_count: 30, known_topics: Some(3), ..ScenarioParams::default() }
}

#[test]
fn loop_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = synth_scenario(&params(), 3).unwrap();
    let mut config = synthetic_config(params(), 3);
    config.max_iterations = 2;
    let dir = RunDir::create(tmp.path(), "run", &config, &config.to_toml()).unwrap();
    let inputs = PipelineInputs::from_scenario(&scenario);
    let profile = config.profile().unwrap();
    let agent = AgentClient::new(ScenarioAgent::new(&scenario, &profile), 0)
        .with_transcript(&dir.file(rundir::TRANSCRIPT))
        .unwrap();
    let backend = SyntheticOracle { model: inputs.oracle.clone().unwrap() };
    let p = Pipeline::new(&config, &inputs, &agent, &backend, Some(&dir)).unwrap();
    let out = p.run_loop().unwrap();

    assert_eq!(dir.run_id, "run-0001");
    let reports: Vec<IterationReport> = dir.read_jsonl(rundir::REPORTS).unwrap();
    assert_eq!(reports, out.reports);
    let windows: Vec<WindowRecord> = dir.read_jsonl(rundir::WINDOWS).unwrap();
    assert_eq!(windows.len(), reports.iter().map(|r| r.validation_size).sum::<usize>());
    for r in &reports {
        let ds = read_dataset(&dir.path().join(format!("iteration_{}/dataset.jsonl", r.iteration))).unwrap();
        assert_eq!(ds.len(), r.dataset_size);
    }
    assert_eq!(read_dataset(&dir.file(rundir::FINAL_DATASET)).unwrap().len(), out.final_dataset_size);
    assert_eq!(std::fs::read_to_string(dir.file(rundir::FINAL_LOGIC)).unwrap(), out.final_logic.text);
    let reloaded = newscast::pipeline::PipelineConfig::from_toml(
        &std::fs::read_to_string(dir.file(rundir::CONFIG)).unwrap(),
    )
    .unwrap();
    assert_eq!(reloaded, config);

    let transcript = read_transcript(&dir.file(rundir::TRANSCRIPT)).unwrap();
    assert_eq!(transcript.len(), agent.total_calls());

    // Replaying the transcript reproduces the run without the scripted agent.
    let replay = AgentClient::new(ReplayChat::new(transcript), 0);
    let p2 = Pipeline::new(&config, &inputs, &replay, &backend, None).unwrap();
    let again = p2.run_loop().unwrap();
    let strip = |rs: &[IterationReport]| rs.iter().map(IterationReport::without_timing).collect::<Vec<_>>();
    assert_eq!(strip(&again.reports), strip(&out.reports));
    assert_eq!(again.final_logic, out.final_logic);

    let second = RunDir::create(tmp.path(), "run", &config, "").unwrap();
    assert_eq!(second.run_id, "run-0002");
    assert!(RunDir::open(&tmp.path().join("run-0001")).is_ok());
    assert!(RunDir::open(tmp.path()).is_err());
}
