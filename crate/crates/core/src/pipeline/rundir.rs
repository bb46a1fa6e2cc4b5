use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";
pub const TRANSCRIPT: &str = "transcript.jsonl";
pub const REPORTS: &str = "reports.jsonl";
pub const WINDOWS: &str = "windows.jsonl";
pub const PAIRINGS: &str = "pairings.jsonl";
pub const ABLATION: &str = "ablation.json";
pub const FINAL_LOGIC: &str = "final_logic.txt";
pub const FINAL_DATASET: &str = "final_dataset.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: DateTime<Utc>,
    pub command: String,
    pub config: serde_json::Value,
    /// Artifact name → path relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
}

fn io(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

/// One run's output directory, `<root>/run-NNNN`.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub run_id: String,
    path: PathBuf,
}

impl RunDir {
    /// Allocate the next unused run id under `root` and write the manifest
    /// and config snapshot before anything else.
    pub fn create(root: &Path, command: &str, config: &impl Serialize, config_toml: &str) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        let mut n = 1;
        let (run_id, path) = loop {
            let id = format!("run-{n:04}");
            let path = root.join(&id);
            match fs::create_dir(&path) {
                Ok(()) => break (id, path),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(io(&path, e)),
            }
        };
        let dir = Self { run_id: run_id.clone(), path };
        let artifacts = [
            ("config", CONFIG),
            ("transcript", TRANSCRIPT),
            ("reports", REPORTS),
            ("windows", WINDOWS),
            ("pairings", PAIRINGS),
            ("datasets", "iteration_*/dataset.jsonl"),
            ("final_logic", FINAL_LOGIC),
            ("final_dataset", FINAL_DATASET),
            ("ablation", ABLATION),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let manifest = RunManifest {
            run_id,
            created_at: Utc::now(),
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| PipelineError::Io(e.to_string()))?,
            artifacts,
        };
        dir.write_json(MANIFEST, &manifest)?;
        dir.write_text(CONFIG, config_toml)?;
        Ok(dir)
    }

    /// An existing run directory; it must hold a manifest.
    pub fn open(path: &Path) -> Result<Self> {
        let manifest = path.join(MANIFEST);
        if !manifest.is_file() {
            return Err(PipelineError::Report(format!("{} is not a run directory (no {MANIFEST})", path.display())));
        }
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest).map_err(|e| io(&manifest, e))?)
            .map_err(|e| PipelineError::Report(format!("{}: {e}", manifest.display())))?;
        Ok(Self { run_id: m.run_id, path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn dataset_path(&self, iteration: usize) -> Result<PathBuf> {
        let dir = self.path.join(format!("iteration_{iteration}"));
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(dir.join("dataset.jsonl"))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name);
        fs::write(&p, text).map_err(|e| io(&p, e))
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Io(e.to_string()))?;
        self.write_text(name, &text)
    }

    pub fn append_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.file(name);
        let mut f = OpenOptions::new().create(true).append(true).open(&p).map_err(|e| io(&p, e))?;
        for row in rows {
            let line = serde_json::to_string(row).map_err(|e| PipelineError::Io(e.to_string()))?;
            writeln!(f, "{line}").map_err(|e| io(&p, e))?;
        }
        Ok(())
    }

    /// Rows of a line-json artifact; a missing file reads as empty.
    pub fn read_jsonl<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>> {
        let p = self.file(name);
        if !p.exists() {
            return Ok(Vec::new());
        }
        let f = File::open(&p).map_err(|e| io(&p, e))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| io(&p, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| PipelineError::Report(format!("{}:{}: {e}", p.display(), i + 1)))?,
            );
        }
        Ok(out)
    }
}
