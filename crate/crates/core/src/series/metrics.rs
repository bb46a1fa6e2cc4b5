use serde::{Deserialize, Serialize};

use super::error::{Result, SeriesError};
use crate::scalar::Scalar;

/// Point-forecast error summary over `n` values, in domain units.
///
/// `mape` is in percent and is `None` when any actual value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MetricReport<T: Scalar> {
    pub mse: T,
    pub rmse: T,
    pub mae: T,
    pub mape: Option<T>,
    pub n: usize,
}

impl<T: Scalar> MetricReport<T> {
    pub fn mape_omitted(&self) -> bool {
        self.mape.is_none()
    }
}

pub fn compute_metrics<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<MetricReport<T>> {
    if actual.len() != predicted.len() {
        return Err(SeriesError::MetricError(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(SeriesError::MetricError("no values".into()));
    }
    let n = actual.len();
    let count = T::of_count(n);
    let (sq, abs) = actual
        .iter()
        .zip(predicted)
        .fold((T::zero(), T::zero()), |(sq, abs), (&y, &yhat)| {
            let e = y - yhat;
            (sq + e * e, abs + e.abs())
        });
    let mse = sq / count;
    let mape = if actual.iter().any(|y| y.is_zero()) {
        None
    } else {
        let pct = actual
            .iter()
            .zip(predicted)
            .map(|(&y, &yhat)| ((y - yhat) / y).abs())
            .fold(T::zero(), |a, b| a + b);
        Some(T::of(100.0) * pct / count)
    };
    Ok(MetricReport {
        mse,
        rmse: mse.sqrt(),
        mae: abs / count,
        mape,
        n,
    })
}
