//! Timestamp parsing and the date/duration phrasings used in prompts.

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, TimeZone, Utc};

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
    "%Y/%m/%d %H:%M:%S",
];

const DATE_FORMATS: &[&str] = &["%Y-%m-%d", "%m/%d/%Y", "%Y/%m/%d"];

/// Parse a timestamp in any of the accepted layouts and normalize to UTC.
///
/// Offsets are honored when present (RFC 3339); naive values are taken as
/// UTC. Date-only values map to midnight.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(text) {
        return Some(ts.with_timezone(&Utc));
    }
    if let Ok(ts) = DateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%z") {
        return Some(ts.with_timezone(&Utc));
    }
    for fmt in NAIVE_FORMATS {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(Utc.from_utc_datetime(&naive));
        }
    }
    parse_date(text).map(|d| Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap()))
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let text = text.trim();
    DATE_FORMATS
        .iter()
        .find_map(|fmt| NaiveDate::parse_from_str(text, fmt).ok())
}

/// `2019-11-09 08:51:00`
pub fn news_time(ts: &DateTime<Utc>) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

/// `2019-11-9`: calendar dates in prompts carry no zero padding.
pub fn calendar_date(date: NaiveDate) -> String {
    date.format("%Y-%-m-%-d").to_string()
}

/// `2020-06-06`
pub fn iso_date(date: NaiveDate) -> String {
    date.format("%Y-%m-%d").to_string()
}

/// A duration in the largest whole unit: `30 minutes`, `1 hour`, `7 days`.
pub fn duration_phrase(d: Duration) -> String {
    let minutes = d.num_minutes();
    let (count, unit) = if minutes > 0 && minutes % (24 * 60) == 0 {
        (minutes / (24 * 60), "day")
    } else if minutes > 0 && minutes % 60 == 0 {
        (minutes / 60, "hour")
    } else {
        (minutes, "minute")
    };
    if count == 1 {
        format!("1 {unit}")
    } else {
        format!("{count} {unit}s")
    }
}

/// `the next day`, `the next 7 days`, `the next 12 hours`.
pub fn horizon_phrase(d: Duration) -> String {
    let phrase = duration_phrase(d);
    match phrase.strip_prefix("1 ") {
        Some(unit) => format!("the next {unit}"),
        None => format!("the next {phrase}"),
    }
}

/// `the last week`, `the last day`, `the last 3 days`.
pub fn lookback_phrase(d: Duration) -> String {
    if d == Duration::days(7) {
        return "the last week".to_string();
    }
    let phrase = duration_phrase(d);
    match phrase.strip_prefix("1 ") {
        Some(unit) => format!("the last {unit}"),
        None => format!("the last {phrase}"),
    }
}
