//! Sensor CSV exports.
//!
//! Layout: a header row `timestamp,<channel>[,<channel>...]` followed by one
//! row per sample. The delimiter (comma or semicolon) is taken from the
//! header line. Channel columns are named by [`Quantity::label`]; columns
//! the sensor does not declare are ignored. An optional `<channel>_quality`
//! column carries a quality flag, which is how stored series keep their
//! `interpolated` marks across a write/parse cycle.
//!
//! Numbers accept a decimal comma. Timestamps without an offset are local
//! time in the site timezone.

use std::fmt::Write as _;

use chrono_tz::Tz;
use serde::Serialize;

use super::sensor::{Quantity, SensorSpec};
use super::series::{Quality, Reading, TimeSeries};
use crate::time::{parse_decimal, parse_timestamp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub timezone: Tz,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            timezone: chrono_tz::UTC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the file (the header is line 1).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedLog {
    /// One series per declared channel, in declaration order.
    pub series: Vec<TimeSeries>,
    pub rejected: Vec<RejectedRow>,
}

struct Column {
    quantity: Quantity,
    value_idx: usize,
    quality_idx: Option<usize>,
}

fn quality_label(q: Quantity) -> String {
    format!("{}_quality", q.label())
}

pub fn parse_sensor_csv(raw: &str, spec: &SensorSpec, opts: &ParseOptions) -> Result<ParsedLog> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let header_line = raw
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or(Error::EmptyFile)?;
    let delimiter = if header_line.contains(';') { b';' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let ts_idx = find("timestamp")
        .ok_or_else(|| Error::MalformedHeader("missing timestamp column".into()))?;
    let columns = spec
        .channels
        .iter()
        .map(|ch| {
            let value_idx = find(ch.quantity.label()).ok_or_else(|| {
                Error::MalformedHeader(format!("missing declared column {}", ch.quantity))
            })?;
            Ok(Column {
                quantity: ch.quantity,
                value_idx,
                quality_idx: find(&quality_label(ch.quantity)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series: Vec<TimeSeries> = spec
        .channels
        .iter()
        .map(|ch| TimeSeries {
            unit: ch.unit.clone(),
            ..TimeSeries::new(spec.sensor_id.clone(), ch.quantity)
        })
        .collect();
    let mut rejected = Vec::new();
    let mut last = None;
    let mut data_rows = 0usize;

    for record in reader.records() {
        let record = record?;
        let row = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(data_rows + 2);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        data_rows += 1;

        let field = |i: usize| record.get(i).unwrap_or("");
        let Some(ts) = parse_timestamp(field(ts_idx), opts.timezone) else {
            rejected.push(RejectedRow {
                row,
                reason: format!("unparseable timestamp {:?}", field(ts_idx)),
            });
            continue;
        };

        let mut values = Vec::with_capacity(columns.len());
        let mut reason = None;
        for col in &columns {
            let Some(v) = parse_decimal(field(col.value_idx)) else {
                reason = Some(format!(
                    "unparseable {} value {:?}",
                    col.quantity,
                    field(col.value_idx)
                ));
                break;
            };
            let declared = match col.quality_idx {
                None => Quality::Ok,
                Some(i) => match Quality::parse(field(i)) {
                    Some(q) => q,
                    None => {
                        reason = Some(format!("unknown quality flag {:?}", field(i)));
                        break;
                    }
                },
            };
            values.push((v, declared));
        }
        if let Some(reason) = reason {
            rejected.push(RejectedRow { row, reason });
            continue;
        }

        if let Some(prev) = last {
            if ts <= prev {
                return Err(Error::NonMonotonicTimestamps {
                    row,
                    timestamp: field(ts_idx).to_string(),
                });
            }
        }
        last = Some(ts);

        for ((s, ch), (value, declared)) in series.iter_mut().zip(&spec.channels).zip(values) {
            let quality = if !ch.in_range(value) {
                Quality::OutOfRange
            } else {
                declared
            };
            s.readings.push(Reading {
                timestamp: ts,
                value,
                quality,
            });
        }
    }

    if data_rows == 0 {
        return Err(Error::EmptyFile);
    }
    Ok(ParsedLog { series, rejected })
}

/// Writes one series as a sensor CSV with a quality column. Timestamps are
/// UTC RFC 3339; values use the shortest representation that parses back
/// to the same `f64`.
pub fn write_series_csv(series: &TimeSeries) -> String {
    let label = series.quantity.label();
    let mut out = format!("timestamp,{label},{}\n", quality_label(series.quantity));
    for r in &series.readings {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.timestamp.format("%Y-%m-%dT%H:%M:%S%.fZ"),
            r.value,
            r.quality.label()
        );
    }
    out
}
