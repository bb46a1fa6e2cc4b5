//! Digit-token rendering of numeric series.
//!
//! A series is rendered as comma-separated decimal literals with no
//! whitespace, which a language model tokenizer consumes digit by digit.
//! Parsing is the inverse and tolerates trailing model chatter in lenient
//! mode.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::error::{Result, SeriesError};
use crate::scalar::Scalar;

/// How values are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "digits")]
pub enum FormatPolicy {
    /// Fixed number of decimal places.
    Decimals(u8),
    /// Round to a number of significant figures.
    SignificantFigures(u8),
    /// Shortest representation that parses back to the same value.
    Shortest,
}

impl Default for FormatPolicy {
    fn default() -> Self {
        FormatPolicy::Decimals(1)
    }
}

impl FormatPolicy {
    /// Render a single finite value.
    pub fn render<T: Scalar>(&self, value: T) -> String {
        match *self {
            FormatPolicy::Decimals(places) => format!("{:.*}", places as usize, value),
            FormatPolicy::Shortest => format!("{value}"),
            FormatPolicy::SignificantFigures(sig) => render_significant(value.as_f64(), sig.max(1)),
        }
    }

    /// Largest absolute difference between a value and its rendering.
    pub fn resolution(&self, value: f64) -> f64 {
        match *self {
            FormatPolicy::Decimals(places) => 0.5 * 10f64.powi(-(places as i32)),
            FormatPolicy::Shortest => 0.0,
            FormatPolicy::SignificantFigures(sig) => {
                if value == 0.0 {
                    return 0.0;
                }
                let exponent = value.abs().log10().floor() as i32;
                0.5 * 10f64.powi(exponent - sig.max(1) as i32 + 1)
            }
        }
    }
}

fn render_significant(value: f64, sig: u8) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let sig = sig as i32;
    let mut exponent = value.abs().log10().floor() as i32;
    let mut scale = 10f64.powi(exponent - sig + 1);
    let mut rounded = (value / scale).round() * scale;
    // Rounding may carry into the next decade (9.99 -> 10.0).
    let carried = rounded.abs().log10().floor() as i32;
    if carried > exponent {
        exponent = carried;
        scale = 10f64.powi(exponent - sig + 1);
        rounded = (value / scale).round() * scale;
    }
    let decimals = (sig - 1 - exponent).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Render `values` as a comma-separated digit string.
pub fn serialize_digits<T: Scalar>(values: &[T], policy: FormatPolicy) -> Result<String> {
    let mut out = String::with_capacity(values.len() * 8);
    for (index, value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(SeriesError::NonFinite { index });
        }
        if index > 0 {
            out.push(',');
        }
        out.push_str(&policy.render(*value));
    }
    Ok(out)
}

/// Parse strictness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    /// Longest valid numeric prefix; trailing text is ignored.
    #[default]
    Lenient,
    /// Every token must be a literal and the count must match.
    Strict,
}

fn literal_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?").unwrap())
}

fn parse_literal<T: Scalar>(token: &str) -> Option<T> {
    let m = literal_prefix().find(token)?;
    if m.end() != token.len() {
        return None;
    }
    token.parse::<T>().ok().filter(|v| v.is_finite())
}

/// Parse a digit string produced by a model or by [`serialize_digits`].
///
/// In lenient mode the text may start with wrapper characters (quotes,
/// brackets) and end with arbitrary non-numeric text; the longest prefix
/// of numeric literals is returned, truncated to `expected_len` if given.
/// In strict mode every comma-separated token must be a finite literal and
/// the count must equal `expected_len` when one is given.
pub fn parse_digits<T: Scalar>(
    text: &str,
    expected_len: Option<usize>,
    mode: ParseMode,
) -> Result<Vec<T>> {
    match mode {
        ParseMode::Lenient => parse_lenient(text, expected_len),
        ParseMode::Strict => parse_strict(text, expected_len),
    }
}

fn parse_lenient<T: Scalar>(text: &str, expected_len: Option<usize>) -> Result<Vec<T>> {
    let body = text.trim_start_matches(|c: char| {
        c.is_whitespace() || matches!(c, '"' | '\'' | '[' | '{' | '(' | '`')
    });
    let mut values = Vec::new();
    for token in body.split(',') {
        let token = token.trim();
        if let Some(v) = parse_literal::<T>(token) {
            values.push(v);
            continue;
        }
        // Keep a literal that runs into trailing chatter, then stop.
        if let Some(m) = literal_prefix().find(token) {
            if let Ok(v) = m.as_str().parse::<T>() {
                if v.is_finite() {
                    values.push(v);
                }
            }
        }
        break;
    }
    if values.is_empty() {
        return Err(SeriesError::ParseFailure(preview(text)));
    }
    if let Some(n) = expected_len {
        values.truncate(n);
    }
    Ok(values)
}

fn parse_strict<T: Scalar>(text: &str, expected_len: Option<usize>) -> Result<Vec<T>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return match expected_len {
            Some(0) => Ok(Vec::new()),
            _ => Err(SeriesError::ParseFailure("empty input".to_string())),
        };
    }
    let mut values = Vec::new();
    for (position, token) in trimmed.split(',').enumerate() {
        match parse_literal::<T>(token.trim()) {
            Some(v) => values.push(v),
            None => {
                return Err(SeriesError::ParseFailure(format!(
                    "token {position} is not a finite literal: {:?}",
                    token
                )))
            }
        }
    }
    if let Some(expected) = expected_len {
        if values.len() != expected {
            return Err(SeriesError::HorizonMismatch {
                expected,
                parsed: values.len(),
            });
        }
    }
    Ok(values)
}

fn preview(text: &str) -> String {
    let head: String = text.chars().take(40).collect();
    format!("{head:?}")
}
