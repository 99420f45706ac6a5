//! Timestamp and period helpers shared by the ingestion and event modules.
//!
//! Every instant is held as `DateTime<Utc>`. Local civil time only shows up
//! at the edges: timestamps without an explicit offset in sensor exports,
//! and calendar-day boundaries when counting days.

use chrono::{DateTime, Duration, LocalResult, NaiveDate, NaiveDateTime, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Period {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidParameter(format!(
                "empty period: {start} .. {end}"
            )));
        }
        Ok(Period { start, end })
    }

    /// Whole local calendar days `first..=last` in `tz`.
    pub fn local_days(first: NaiveDate, last: NaiveDate, tz: Tz) -> Result<Self> {
        let end_day = last
            .succ_opt()
            .ok_or_else(|| Error::InvalidParameter(format!("date out of range: {last}")))?;
        Period::new(local_midnight(first, tz)?, local_midnight(end_day, tz)?)
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn duration(&self) -> Duration {
        self.end - self.start
    }

    /// Intersection, or `None` when the periods do not overlap.
    pub fn intersect(&self, other: &Period) -> Option<Period> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start < end).then_some(Period { start, end })
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} .. {}", self.start.to_rfc3339(), self.end.to_rfc3339())
    }
}

/// First instant of a local calendar day.
pub fn local_midnight(day: NaiveDate, tz: Tz) -> Result<DateTime<Utc>> {
    let naive = day.and_hms_opt(0, 0, 0).expect("midnight is valid");
    localize(naive, tz)
        .ok_or_else(|| Error::InvalidParameter(format!("{day} has no local midnight in {tz}")))
}

/// Interprets a naive local timestamp in `tz`. Ambiguous instants (the
/// repeated hour when clocks go back) resolve to the earlier one; instants
/// skipped by a forward shift return `None`.
pub fn localize(naive: NaiveDateTime, tz: Tz) -> Option<DateTime<Utc>> {
    match tz.from_local_datetime(&naive) {
        LocalResult::Single(t) => Some(t.with_timezone(&Utc)),
        LocalResult::Ambiguous(early, _) => Some(early.with_timezone(&Utc)),
        LocalResult::None => None,
    }
}

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%d/%m/%Y %H:%M:%S",
    "%d/%m/%Y %H:%M",
];

const OFFSET_FORMATS: &[&str] = &["%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M%:z"];

/// Parses an ISO 8601 timestamp. An explicit offset (or `Z`) wins; without
/// one the value is read as local civil time in `tz`.
pub fn parse_timestamp(raw: &str, tz: Tz) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in OFFSET_FORMATS {
        if let Ok(t) = DateTime::parse_from_str(raw, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    if let Some(stripped) = raw.strip_suffix('Z') {
        for fmt in NAIVE_FORMATS {
            if let Ok(n) = NaiveDateTime::parse_from_str(stripped, fmt) {
                return Some(n.and_utc());
            }
        }
        return None;
    }
    NAIVE_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .and_then(|n| localize(n, tz))
}

/// Parses a real number accepting either a decimal point or a decimal comma
/// ("39,6").
pub fn parse_decimal(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    let value = if raw.contains(',') && !raw.contains('.') {
        raw.replacen(',', ".", 1).parse::<f64>().ok()?
    } else {
        raw.parse::<f64>().ok()?
    };
    value.is_finite().then_some(value)
}

/// `Duration` from whole minutes.
pub fn minutes(m: i64) -> Duration {
    Duration::minutes(m)
}
