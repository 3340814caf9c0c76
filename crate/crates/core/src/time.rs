//! Millisecond timestamps and the textual formats accepted on ingestion.

use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// Milliseconds since the Unix epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn millis(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unit of bare integer timestamps in input files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Seconds,
    Millis,
}

const NAIVE_FORMATS: &[&str] = &["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];

/// Parses an integer (in `unit`) or an ISO-8601 date/time. Zone-less
/// date-times are read as UTC.
pub fn parse_timestamp(raw: &str, unit: TimeUnit) -> Option<Timestamp> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(v) = s.parse::<i64>() {
        return match unit {
            TimeUnit::Seconds => v.checked_mul(1000).map(Timestamp),
            TimeUnit::Millis => Some(Timestamp(v)),
        };
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(dt.timestamp_millis()));
    }
    for fmt in NAIVE_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Timestamp(dt.and_utc().timestamp_millis()));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| Timestamp(dt.and_utc().timestamp_millis()))
}

/// Parses a duration such as `500ms`, `30s`, `15m`, `6h`, `1d` or `2w` into
/// milliseconds. A bare integer is read as seconds, matching bare integer
/// timestamps.
pub fn parse_duration_ms(raw: &str) -> Option<i64> {
    let s = raw.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: i64 = num.parse().ok()?;
    let scale = match unit {
        "" | "s" => 1_000,
        "ms" => 1,
        "m" => 60_000,
        "h" => 3_600_000,
        "d" => 86_400_000,
        "w" => 604_800_000,
        _ => return None,
    };
    value.checked_mul(scale).filter(|&v| v > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_follow_the_unit() {
        assert_eq!(parse_timestamp("5", TimeUnit::Seconds), Some(Timestamp(5000)));
        assert_eq!(parse_timestamp(" 5 ", TimeUnit::Millis), Some(Timestamp(5)));
        assert_eq!(parse_timestamp("-2", TimeUnit::Seconds), Some(Timestamp(-2000)));
        assert_eq!(parse_timestamp(&i64::MAX.to_string(), TimeUnit::Seconds), None);
    }

    #[test]
    fn iso_forms_agree() {
        let expected = Some(Timestamp(1_262_304_000_000));
        assert_eq!(parse_timestamp("2010-01-01T00:00:00Z", TimeUnit::Seconds), expected);
        assert_eq!(parse_timestamp("2010-01-01T01:00:00+01:00", TimeUnit::Seconds), expected);
        assert_eq!(parse_timestamp("2010-01-01 00:00:00", TimeUnit::Seconds), expected);
        assert_eq!(parse_timestamp("2010-01-01", TimeUnit::Seconds), expected);
        assert_eq!(
            parse_timestamp("2010-01-01T00:00:00.250", TimeUnit::Seconds),
            Some(Timestamp(1_262_304_000_250))
        );
    }

    #[test]
    fn garbage_is_rejected() {
        assert_eq!(parse_timestamp("", TimeUnit::Seconds), None);
        assert_eq!(parse_timestamp("yesterday", TimeUnit::Seconds), None);
        assert_eq!(parse_timestamp("1.5", TimeUnit::Seconds), None);
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration_ms("500ms"), Some(500));
        assert_eq!(parse_duration_ms("2"), Some(2000));
        assert_eq!(parse_duration_ms("1d"), Some(86_400_000));
        assert_eq!(parse_duration_ms("0s"), None);
        assert_eq!(parse_duration_ms("3fortnights"), None);
    }
}
