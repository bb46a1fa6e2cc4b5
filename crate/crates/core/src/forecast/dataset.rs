use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ForecastError, Result};
use crate::prompt::TrainingExample;

/// One JSON object per line with exactly `instruction`, `input`, `output`.
/// Training examples need a non-empty output.
pub fn emit_dataset(examples: &[TrainingExample], out: &mut impl Write) -> Result<()> {
    for (index, ex) in examples.iter().enumerate() {
        if ex.output.trim().is_empty() {
            return Err(ForecastError::Emit { index, reason: "empty output".into() });
        }
        let line = serde_json::to_string(ex).map_err(|e| ForecastError::Emit { index, reason: e.to_string() })?;
        writeln!(out, "{line}").map_err(|e| ForecastError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn write_dataset(examples: &[TrainingExample], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    emit_dataset(examples, &mut w)?;
    w.flush().map_err(|e| ForecastError::Io(e.to_string()))
}

pub fn read_dataset(path: &Path) -> Result<Vec<TrainingExample>> {
    let file = File::open(path).map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ForecastError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: TrainingExample =
            serde_json::from_str(&line).map_err(|e| ForecastError::Emit { index: i, reason: e.to_string() })?;
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(i: usize) -> TrainingExample {
        TrainingExample {
            instruction: format!("{i}.0,\"q\"\n"),
            input: "On 2020-01-01 00:00:00, tab\there".into(),
            output: format!("{i}.5"),
        }
    }

    #[test]
    fn fixpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let examples: Vec<_> = (0..100).map(ex).collect();
        write_dataset(&examples, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), examples);
        let first = std::fs::read_to_string(&path).unwrap();
        let first = first.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 3);
    }

    #[test]
    fn empty_output_names_index() {
        let mut examples: Vec<_> = (0..3).map(ex).collect();
        examples[2].output.clear();
        let mut buf = Vec::new();
        assert_eq!(
            emit_dataset(&examples, &mut buf).unwrap_err(),
            ForecastError::Emit { index: 2, reason: "empty output".into() }
        );
    }
}
