use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SYNTHETIC: &str = r#"
domain = "electricity"
max_iterations = 3
validation_fraction = 0.5
logic_source = "agent"
seed = 7

[backend]
kind = "synthetic_oracle"

[synthetic]
days = 12
news_count = 30
known_topics = 3
"#;

fn newscast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newscast"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn newscast")
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("config.toml");
    fs::write(&path, config).unwrap();
    (tmp, path)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

#[test]
fn run_writes_one_report_per_iteration() {
    let (tmp, _) = setup(SYNTHETIC);
    let o = newscast(tmp.path(), &["--config", "config.toml", "--offline", "--max-iterations", "2", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("runs/run-0001");
    assert_eq!(lines(&run.join("reports.jsonl")), 2);
    for f in ["manifest.json", "config.toml", "final_logic.txt", "final_dataset.jsonl", "iteration_1/dataset.jsonl"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    assert!(stdout(&o).contains("MAPE"));
    assert!(lines(&run.join("transcript.jsonl")) > 0);

    // Same arguments, fresh run id.
    let again = newscast(tmp.path(), &["--config", "config.toml", "--offline", "--max-iterations", "2", "run"]);
    assert!(again.status.success());
    assert_eq!(lines(&tmp.path().join("runs/run-0002/reports.jsonl")), 2);
}

#[test]
fn numeric_only_makes_no_agent_calls() {
    let (tmp, _) = setup(SYNTHETIC);
    let o = newscast(tmp.path(), &["--config", "config.toml", "--offline", "--mode", "numeric_only", "--backend", "mock", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("runs/run-0001");
    assert_eq!(lines(&run.join("transcript.jsonl")), 0);
    assert_eq!(lines(&run.join("reports.jsonl")), 3);
}

#[test]
fn ablation_then_report() {
    let (tmp, _) = setup(SYNTHETIC);
    let o = newscast(tmp.path(), &["--config", "config.toml", "--offline", "run", "--ablation"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("runs/run-0001");
    assert!(run.join("ablation.json").is_file());

    let r = newscast(tmp.path(), &["report", "runs/run-0001", "--output", "out"]);
    assert!(r.status.success(), "{}", stderr(&r));
    let table = fs::read_to_string(tmp.path().join("out/metrics.txt")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.contains('*'));
    assert_eq!(lines(&tmp.path().join("out/metrics.csv")), 5);
    let curves = fs::read_to_string(tmp.path().join("out/curves.csv")).unwrap();
    let mut rows = curves.lines();
    assert_eq!(rows.next().unwrap(), "time_index,actual,predicted_with_news,predicted_without_news");
    let first: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert!(first.iter().all(|c| !c.is_empty()));
}

#[test]
fn report_on_loop_run() {
    let (tmp, _) = setup(SYNTHETIC);
    assert!(newscast(tmp.path(), &["--config", "config.toml", "--offline", "run"]).status.success());
    let r = newscast(tmp.path(), &["report", "runs/run-0001"]);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(lines(&tmp.path().join("runs/run-0001/metrics.csv")), 4);
}

#[test]
fn report_rejects_empty_directory() {
    let (tmp, _) = setup(SYNTHETIC);
    fs::create_dir(tmp.path().join("empty")).unwrap();
    let r = newscast(tmp.path(), &["report", "empty"]);
    assert_eq!(r.status.code(), Some(3));
    assert!(stderr(&r).contains("not a run directory"));
}

#[test]
fn ingest_counts_and_line_errors() {
    let (tmp, _) = setup(SYNTHETIC);
    let item = |id: &str, url: &str| {
        format!(
            r#"{{"id":"{id}","title":"t{id}","content":"c","url":"{url}","published_at":"2020-01-01T00:00:00Z","region":"NSW"}}"#
        )
    };
    let good = [item("a", "http://x/1"), item("b", "http://x/2"), item("c", "http://x/1")].join("\n");
    fs::write(tmp.path().join("news.jsonl"), good + "\n").unwrap();
    let o = newscast(tmp.path(), &["ingest", "--news", "news.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("news: 2 (1 duplicates dropped)"), "{}", stdout(&o));

    let bad = [item("a", "http://x/1"), "{not json".to_string()].join("\n");
    fs::write(tmp.path().join("bad.jsonl"), bad).unwrap();
    let o = newscast(tmp.path(), &["ingest", "--news", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = newscast(tmp.path(), &["--config", "config.toml", "ingest"]);
    assert!(stdout(&o).contains("news: 30"), "{}", stdout(&o));
}

#[test]
fn stage_commands_emit_line_json() {
    let (tmp, _) = setup(SYNTHETIC);
    for (cmd, file) in [("pair", "p.jsonl"), ("select", "s.jsonl"), ("build-dataset", "d.jsonl"), ("forecast", "f.jsonl")] {
        let o = newscast(tmp.path(), &["--config", "config.toml", "--offline", cmd, "--output", file]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        let text = fs::read_to_string(tmp.path().join(file)).unwrap();
        assert!(!text.is_empty(), "{cmd} wrote nothing");
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap_or_else(|e| panic!("{cmd}: {e}: {line}"));
        }
    }
    let d = fs::read_to_string(tmp.path().join("d.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(d.lines().next().unwrap()).unwrap();
    assert_eq!(first.as_object().unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    let (tmp, _) = setup(SYNTHETIC);
    let usage = newscast(tmp.path(), &["--mode", "sideways", "run"]);
    assert_eq!(usage.status.code(), Some(2));

    let missing = newscast(tmp.path(), &["--config", "nope.toml", "run"]);
    assert_eq!(missing.status.code(), Some(3));

    let bad = newscast(tmp.path(), &["--config", "config.toml", "--max-iterations", "0", "run"]);
    assert_eq!(bad.status.code(), Some(3));

    // A remote forecaster behind a deny-all transport fails in the forecast stage.
    let remote = format!(
        "{SYNTHETIC}\n[backend.remote]\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmax_retries = 0\n"
    )
    .replace("kind = \"synthetic_oracle\"", "kind = \"remote\"");
    fs::write(tmp.path().join("remote.toml"), remote).unwrap();
    let o = newscast(tmp.path(), &["--config", "remote.toml", "--offline", "--mode", "numeric_only", "run"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("[forecast]"), "{}", stderr(&o));
}
