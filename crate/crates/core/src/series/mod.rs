//! Time-series storage, windowing, digit rendering, splits and metrics.
//!
//! Everything here is generic over [`Scalar`]; the crate root re-exports
//! `f64` instantiations.

mod digits;
mod error;
mod metrics;
mod window;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

pub use digits::{parse_digits, serialize_digits, FormatPolicy, ParseMode};
pub use error::{Result, SeriesError};
pub use metrics::{compute_metrics, MetricReport};
pub use window::{make_windows, split_tasks, ForecastTask, SplitRole, DEFAULT_VALIDATION_CAP};

use crate::scalar::Scalar;
use crate::timefmt;

/// Application domain of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Electricity,
    Exchange,
    Traffic,
    Bitcoin,
    #[serde(other)]
    Custom,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Electricity => "electricity",
            Domain::Exchange => "exchange",
            Domain::Traffic => "traffic",
            Domain::Bitcoin => "bitcoin",
            Domain::Custom => "custom",
        }
    }
}

/// A univariate series at fixed granularity, stored unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Scalar> {
    pub id: String,
    pub domain: Domain,
    pub region: String,
    pub granularity: Duration,
    pub start: DateTime<Utc>,
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(
        id: impl Into<String>,
        domain: Domain,
        region: impl Into<String>,
        granularity: Duration,
        start: DateTime<Utc>,
        values: Vec<T>,
    ) -> Result<Self> {
        if granularity <= Duration::zero() {
            return Err(SeriesError::WindowError("granularity must be positive".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(Self {
            id: id.into(),
            domain,
            region: region.into(),
            granularity,
            start,
            values,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + self.granularity * index as i32
    }

    /// Points per calendar day, when the granularity divides a day.
    pub fn points_per_day(&self) -> Option<usize> {
        let minutes = self.granularity.num_minutes();
        (minutes > 0 && (24 * 60) % minutes == 0).then(|| ((24 * 60) / minutes) as usize)
    }
}

/// One line of the series ingestion file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub id: String,
    pub domain: Domain,
    pub region: String,
    pub granularity_minutes: i64,
    pub start_iso8601: String,
    pub values: Vec<Option<f64>>,
}

impl SeriesRecord {
    pub fn from_series<T: Scalar>(series: &TimeSeries<T>) -> Self {
        Self {
            id: series.id.clone(),
            domain: series.domain,
            region: series.region.clone(),
            granularity_minutes: series.granularity.num_minutes(),
            start_iso8601: series.start.to_rfc3339(),
            values: series.values.iter().map(|v| Some(v.as_f64())).collect(),
        }
    }

    fn into_series<T: Scalar>(self) -> std::result::Result<TimeSeries<T>, String> {
        let start = timefmt::parse_timestamp(&self.start_iso8601)
            .ok_or_else(|| format!("unparseable start {:?}", self.start_iso8601))?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v.map(T::of).ok_or_else(|| format!("missing value at index {i}")))
            .collect::<std::result::Result<Vec<T>, String>>()?;
        TimeSeries::new(
            self.id,
            self.domain,
            self.region,
            Duration::minutes(self.granularity_minutes),
            start,
            values,
        )
        .map_err(|e| e.to_string())
    }
}

/// Read a line-json series file. Blank lines are skipped; missing values
/// are rejected rather than imputed.
pub fn read_series<T: Scalar>(path: &Path) -> Result<Vec<TimeSeries<T>>> {
    let file = File::open(path).map_err(|e| SeriesError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| SeriesError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SeriesRecord = serde_json::from_str(&line).map_err(|e| SeriesError::Ingest {
            line: line_no,
            reason: e.to_string(),
        })?;
        let series = record
            .into_series()
            .map_err(|reason| SeriesError::Ingest { line: line_no, reason })?;
        out.push(series);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::io::Write;

    #[test]
    fn timestamps_follow_granularity() {
        let start = Utc.with_ymd_and_hms(2019, 11, 9, 0, 0, 0).unwrap();
        let s = TimeSeries::new("nsw", Domain::Electricity, "NSW", Duration::minutes(30), start, vec![1.0_f64; 48]).unwrap();
        assert_eq!(s.timestamp(2), Utc.with_ymd_and_hms(2019, 11, 9, 1, 0, 0).unwrap());
        assert_eq!(s.points_per_day(), Some(48));
    }

    #[test]
    fn rejects_non_finite() {
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let err = TimeSeries::new("x", Domain::Custom, "R", Duration::hours(1), start, vec![1.0, f64::INFINITY]).unwrap_err();
        assert_eq!(err, SeriesError::NonFinite { index: 1 });
    }

    #[test]
    fn reads_series_file_and_rejects_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, r#"{{"id":"a","domain":"electricity","region":"NSW","granularity_minutes":30,"start_iso8601":"2019-11-09T00:00:00Z","values":[1.5,2.5]}}"#).unwrap();
        writeln!(f, r#"{{"id":"b","domain":"weird","region":"X","granularity_minutes":60,"start_iso8601":"2019-11-09 00:00:00","values":[3]}}"#).unwrap();
        drop(f);
        let all: Vec<TimeSeries<f64>> = read_series(&path).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].values(), &[1.5, 2.5]);
        assert_eq!(all[1].domain, Domain::Custom);

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, "{\"id\":\"a\",\"domain\":\"traffic\",\"region\":\"CA\",\"granularity_minutes\":60,\"start_iso8601\":\"2015-01-01T00:00:00Z\",\"values\":[1,null]}\n").unwrap();
        let err = read_series::<f64>(&bad).unwrap_err();
        assert!(matches!(err, SeriesError::Ingest { line: 1, .. }));
    }
}
