use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run::{ModeResult, WindowRecord};
use super::{PipelineError, Result};
use crate::prompt::PromptMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: PromptMode,
    pub rmse: f64,
    pub mse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    /// Lowest in column, in RMSE, MSE, MAE, MAPE order.
    pub best: [bool; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

pub const COLUMNS: [&str; 4] = ["RMSE", "MSE", "MAE", "MAPE"];

/// Rows are modes, columns the four error metrics; the best entry of each
/// column is flagged. Every mode must have been scored on the same tasks.
pub fn report_ablation(results: &[ModeResult]) -> Result<AblationTable> {
    if results.len() < 2 {
        return Err(PipelineError::Report(format!("an ablation needs at least 2 modes, got {}", results.len())));
    }
    let split = &results[0].tasks;
    if let Some(r) = results.iter().find(|r| &r.tasks != split) {
        return Err(PipelineError::Report(format!(
            "mode {} was evaluated on a different task split than {}",
            r.mode, results[0].mode
        )));
    }
    let mut rows = results
        .iter()
        .map(|r| {
            let m = r
                .metrics
                .ok_or_else(|| PipelineError::Report(format!("mode {} has no validation metrics", r.mode)))?;
            Ok(AblationRow { mode: r.mode, rmse: m.rmse, mse: m.mse, mae: m.mae, mape: m.mape, best: [false; 4] })
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |r: &AblationRow, c: usize| match c {
        0 => Some(r.rmse),
        1 => Some(r.mse),
        2 => Some(r.mae),
        _ => r.mape,
    };
    for c in 0..4 {
        let best = rows.iter().filter_map(|r| column(r, c)).fold(f64::INFINITY, f64::min);
        for r in rows.iter_mut() {
            r.best[c] = column(r, c) == Some(best);
        }
    }
    Ok(AblationTable { rows })
}

impl AblationTable {
    /// Fixed-width text; `*` marks the best value per column.
    pub fn render(&self) -> String {
        let mut out = format!("{:<26}", "mode");
        for c in COLUMNS {
            let _ = write!(out, "{c:>14}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<26}", r.mode.name());
            let cells = [Some(r.rmse), Some(r.mse), Some(r.mae), r.mape];
            for (v, best) in cells.iter().zip(r.best) {
                let cell = match v {
                    Some(v) => format!("{v:.4}{}", if best { "*" } else { " " }),
                    None => "n/a ".to_string(),
                };
                let _ = write!(out, "{cell:>14}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,rmse,mse,mae,mape\n");
        for r in &self.rows {
            let mape = r.mape.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{mape}", r.mode.name(), r.rmse, r.mse, r.mae);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub time_index: usize,
    pub actual: f64,
    pub with_news: Option<f64>,
    pub without_news: Option<f64>,
}

/// Overlay data: each forecast point of the with-news windows, joined by
/// series index with the without-news windows. Columns: time_index,
/// actual, predicted_with_news, predicted_without_news.
pub fn curves_csv(with_news: &[WindowRecord], without_news: &[WindowRecord]) -> String {
    use std::collections::BTreeMap;
    let mut points: BTreeMap<(String, usize), CurvePoint> = BTreeMap::new();
    let series_of = |w: &WindowRecord| w.task_ref.rsplit_once('@').map(|(s, _)| s.to_string()).unwrap_or_default();
    for (records, slot) in [(with_news, 0), (without_news, 1)] {
        for w in records {
            for (k, (&a, &p)) in w.actual.iter().zip(&w.predicted).enumerate() {
                let idx = w.start_index + k;
                let e = points.entry((series_of(w), idx)).or_insert(CurvePoint {
                    time_index: idx,
                    actual: a,
                    with_news: None,
                    without_news: None,
                });
                if slot == 0 {
                    e.with_news = Some(p);
                } else {
                    e.without_news = Some(p);
                }
            }
        }
    }
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("time_index,actual,predicted_with_news,predicted_without_news\n");
    for p in points.values() {
        let _ = writeln!(out, "{},{},{},{}", p.time_index, p.actual, cell(p.with_news), cell(p.without_news));
    }
    out
}
