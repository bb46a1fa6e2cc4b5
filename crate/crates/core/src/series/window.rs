use std::ops::Range;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::error::{Result, SeriesError};
use super::TimeSeries;
use crate::scalar::Scalar;

/// Validation tasks drawn per iteration when no cap is configured.
pub const DEFAULT_VALIDATION_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// One forecasting problem: a history window immediately followed by a
/// horizon of future points on the same series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastTask {
    pub id: String,
    pub series_ref: String,
    pub history: Range<usize>,
    pub horizon: usize,
    pub history_start: DateTime<Utc>,
    pub forecast_start: DateTime<Utc>,
    pub granularity_minutes: i64,
    pub region: String,
    pub split: SplitRole,
}

impl ForecastTask {
    pub fn granularity(&self) -> Duration {
        Duration::minutes(self.granularity_minutes)
    }

    pub fn input_len(&self) -> usize {
        self.history.len()
    }

    /// Index range of the horizon within the parent series.
    pub fn target_range(&self) -> Range<usize> {
        self.history.end..self.history.end + self.horizon
    }

    pub fn history_span(&self) -> Duration {
        self.granularity() * self.input_len() as i32
    }

    pub fn horizon_span(&self) -> Duration {
        self.granularity() * self.horizon as i32
    }

    /// End of the horizon (exclusive).
    pub fn forecast_end(&self) -> DateTime<Utc> {
        self.forecast_start + self.horizon_span()
    }

    pub fn history_values<'a, T: Scalar>(&self, series: &'a TimeSeries<T>) -> &'a [T] {
        &series.values()[self.history.clone()]
    }

    pub fn target_values<'a, T: Scalar>(&self, series: &'a TimeSeries<T>) -> &'a [T] {
        &series.values()[self.target_range()]
    }
}

/// Slide a window of `input_len + horizon` points over the series.
///
/// Tasks are ordered by forecast start; their count is
/// `floor((len - input_len - horizon) / stride) + 1`.
pub fn make_windows<T: Scalar>(
    series: &TimeSeries<T>,
    input_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<ForecastTask>> {
    if input_len == 0 || horizon == 0 || stride == 0 {
        return Err(SeriesError::WindowError(
            "input length, horizon and stride must be at least 1".into(),
        ));
    }
    let span = input_len + horizon;
    if series.len() < span {
        return Err(SeriesError::WindowError(format!(
            "series {} has {} points, a window needs {span}",
            series.id,
            series.len()
        )));
    }
    let count = (series.len() - span) / stride + 1;
    let tasks = (0..count)
        .map(|k| {
            let begin = k * stride;
            let cut = begin + input_len;
            ForecastTask {
                id: format!("{}@{cut}", series.id),
                series_ref: series.id.clone(),
                history: begin..cut,
                horizon,
                history_start: series.timestamp(begin),
                forecast_start: series.timestamp(cut),
                granularity_minutes: series.granularity.num_minutes(),
                region: series.region.clone(),
                split: SplitRole::Train,
            }
        })
        .collect();
    Ok(tasks)
}

/// Seeded random partition into (train, validation).
///
/// Validation size is `min(ceil(fraction * n), cap)`. Both halves keep the
/// input order and carry their [`SplitRole`].
pub fn split_tasks(
    tasks: &[ForecastTask],
    validation_fraction: f64,
    seed: u64,
    cap: usize,
) -> Result<(Vec<ForecastTask>, Vec<ForecastTask>)> {
    if tasks.is_empty() {
        return Err(SeriesError::SplitError("no tasks to split".into()));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(SeriesError::SplitError(format!(
            "validation fraction {validation_fraction} outside (0, 1)"
        )));
    }
    let wanted = (validation_fraction * tasks.len() as f64).ceil() as usize;
    let size = wanted.min(cap).min(tasks.len());

    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_validation = vec![false; tasks.len()];
    for &i in &order[..size] {
        is_validation[i] = true;
    }

    let mut train = Vec::with_capacity(tasks.len() - size);
    let mut validation = Vec::with_capacity(size);
    for (task, &v) in tasks.iter().zip(&is_validation) {
        let mut task = task.clone();
        if v {
            task.split = SplitRole::Validation;
            validation.push(task);
        } else {
            task.split = SplitRole::Train;
            train.push(task);
        }
    }
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Domain;
    use chrono::TimeZone;

    fn series(len: usize) -> TimeSeries<f64> {
        let start = Utc.with_ymd_and_hms(2019, 11, 9, 0, 0, 0).unwrap();
        let values = (0..len).map(|i| i as f64).collect();
        TimeSeries::new("nsw", Domain::Electricity, "NSW", Duration::minutes(30), start, values).unwrap()
    }

    // Independent count: enumerate every start offset that fits.
    fn brute_force_count(len: usize, input: usize, horizon: usize, stride: usize) -> usize {
        (0..len).step_by(stride).filter(|b| b + input + horizon <= len).count()
    }

    #[test]
    fn one_day_in_one_day_out() {
        let tasks = make_windows(&series(96), 48, 48, 48).unwrap();
        assert_eq!(tasks.len(), 1);
        let t = &tasks[0];
        assert_eq!(t.history, 0..48);
        assert_eq!(t.target_range(), 48..96);
        assert_eq!(t.forecast_start, Utc.with_ymd_and_hms(2019, 11, 10, 0, 0, 0).unwrap());
        assert_eq!(make_windows(&series(96), 48, 48, 1).unwrap().len(), 1);
    }

    #[test]
    fn too_short_is_rejected() {
        let err = make_windows(&series(95), 48, 48, 48).unwrap_err();
        assert!(matches!(err, SeriesError::WindowError(_)));
    }

    #[test]
    fn count_matches_enumeration() {
        for len in [10, 17, 50, 97] {
            for (input, horizon) in [(2, 3), (4, 4), (5, 1)] {
                for stride in 1..6 {
                    if len < input + horizon {
                        continue;
                    }
                    let got = make_windows(&series(len), input, horizon, stride).unwrap();
                    assert_eq!(got.len(), brute_force_count(len, input, horizon, stride));
                    for t in &got {
                        assert!(t.history.end <= t.target_range().start);
                        assert_eq!(t.forecast_start, t.history_start + t.history_span());
                    }
                }
            }
        }
    }

    #[test]
    fn split_is_reproducible_and_exhaustive() {
        let tasks = make_windows(&series(20), 5, 1, 1).unwrap();
        let tasks = &tasks[..10];
        let (train, val) = split_tasks(tasks, 0.2, 7, DEFAULT_VALIDATION_CAP).unwrap();
        assert_eq!((train.len(), val.len()), (8, 2));
        let again = split_tasks(tasks, 0.2, 7, DEFAULT_VALIDATION_CAP).unwrap();
        assert_eq!((train.clone(), val.clone()), again);
        let mut ids: Vec<_> = train.iter().chain(&val).map(|t| t.id.clone()).collect();
        ids.sort();
        let mut expected: Vec<_> = tasks.iter().map(|t| t.id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        assert!(val.iter().all(|t| t.split == SplitRole::Validation));
    }

    #[test]
    fn split_edges() {
        let tasks = make_windows(&series(10), 5, 1, 1).unwrap();
        let (train, val) = split_tasks(&tasks[..2], 0.5, 1, DEFAULT_VALIDATION_CAP).unwrap();
        assert_eq!((train.len(), val.len()), (1, 1));
        let (train, val) = split_tasks(&tasks, 0.5, 1, 0).unwrap();
        assert_eq!((train.len(), val.len()), (tasks.len(), 0));
        assert!(matches!(split_tasks(&[], 0.5, 1, 4), Err(SeriesError::SplitError(_))));
        assert!(matches!(split_tasks(&tasks, 1.0, 1, 4), Err(SeriesError::SplitError(_))));
    }
}
