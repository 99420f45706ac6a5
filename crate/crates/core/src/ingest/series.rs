use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::sensor::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Ok,
    OutOfRange,
    Interpolated,
}

impl Quality {
    pub fn label(self) -> &'static str {
        match self {
            Quality::Ok => "ok",
            Quality::OutOfRange => "out_of_range",
            Quality::Interpolated => "interpolated",
        }
    }

    pub fn parse(raw: &str) -> Option<Quality> {
        match raw.trim() {
            "ok" | "" => Some(Quality::Ok),
            "out_of_range" => Some(Quality::OutOfRange),
            "interpolated" => Some(Quality::Interpolated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    pub quality: Quality,
}

impl Reading {
    pub fn ok(timestamp: DateTime<Utc>, value: f64) -> Self {
        Reading {
            timestamp,
            value,
            quality: Quality::Ok,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.quality == Quality::Ok
    }
}

/// Stretch between two consecutive ok readings that is longer than the
/// tolerated spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Gap {
    pub fn duration(&self) -> Duration {
        self.end - self.start
    }
}

/// Time-ordered readings of one channel of one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub sensor_id: String,
    pub quantity: Quantity,
    pub unit: String,
    pub readings: Vec<Reading>,
    #[serde(default)]
    pub gaps: Vec<Gap>,
}

impl TimeSeries {
    pub fn new(sensor_id: impl Into<String>, quantity: Quantity) -> Self {
        TimeSeries {
            sensor_id: sensor_id.into(),
            quantity,
            unit: quantity.unit().to_string(),
            readings: Vec::new(),
            gaps: Vec::new(),
        }
    }

    /// Builds a series of ok readings. Panics if timestamps are not strictly
    /// increasing.
    pub fn from_points(
        sensor_id: impl Into<String>,
        quantity: Quantity,
        points: impl IntoIterator<Item = (DateTime<Utc>, f64)>,
    ) -> Self {
        let mut s = TimeSeries::new(sensor_id, quantity);
        s.readings = points.into_iter().map(|(t, v)| Reading::ok(t, v)).collect();
        assert!(s.is_strictly_increasing(), "timestamps must increase");
        s
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn ok_readings(&self) -> impl Iterator<Item = &Reading> + '_ {
        self.readings.iter().filter(|r| r.is_ok())
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.readings
            .windows(2)
            .all(|w| w[0].timestamp < w[1].timestamp)
    }

    /// Copy holding only the readings inside `period`; gaps are dropped.
    pub fn within(&self, period: &crate::time::Period) -> TimeSeries {
        TimeSeries {
            sensor_id: self.sensor_id.clone(),
            quantity: self.quantity,
            unit: self.unit.clone(),
            readings: self
                .readings
                .iter()
                .filter(|r| period.contains(r.timestamp))
                .copied()
                .collect(),
            gaps: Vec::new(),
        }
    }

    /// First and last timestamps.
    pub fn span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        Some((self.readings.first()?.timestamp, self.readings.last()?.timestamp))
    }
}

/// Default multiple of the expected interval beyond which a spacing counts
/// as a gap.
pub const DEFAULT_GAP_FACTOR: f64 = 1.5;

/// Recomputes `gaps`: every spacing between consecutive ok readings longer
/// than `gap_factor × expected_interval`. Non-ok readings do not close a gap.
/// Factors below 1 are treated as 1.
pub fn detect_gaps(mut series: TimeSeries, expected_interval: Duration, gap_factor: f64) -> TimeSeries {
    let factor = if gap_factor.is_finite() { gap_factor.max(1.0) } else { 1.0 };
    let limit_ms = expected_interval.num_milliseconds() as f64 * factor;
    let ok: Vec<DateTime<Utc>> = series.ok_readings().map(|r| r.timestamp).collect();
    series.gaps = ok
        .windows(2)
        .filter(|w| (w[1] - w[0]).num_milliseconds() as f64 > limit_ms)
        .map(|w| Gap {
            start: w[0],
            end: w[1],
        })
        .collect();
    series
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn at(min: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap() + Duration::minutes(min)
    }

    fn series(mins: &[i64]) -> TimeSeries {
        TimeSeries::from_points("TH", Quantity::AirTemp, mins.iter().map(|&m| (at(m), 10.0)))
    }

    #[test]
    fn one_missing_hour_gives_one_sixty_minute_gap() {
        // 00:00 .. 01:00 every 20 min, nothing at 01:20 and 01:40, resumes at 02:00
        let s = series(&[0, 20, 40, 60, 120, 140]);
        let s = detect_gaps(s, Duration::minutes(20), DEFAULT_GAP_FACTOR);
        assert_eq!(s.gaps, vec![Gap { start: at(60), end: at(120) }]);
        assert_eq!(s.gaps[0].duration(), Duration::minutes(60));
    }

    #[test]
    fn regular_and_single_reading_series_have_no_gaps() {
        let s = detect_gaps(series(&[0, 20, 40, 60]), Duration::minutes(20), 1.5);
        assert!(s.gaps.is_empty());
        let s = detect_gaps(series(&[0]), Duration::minutes(20), 1.5);
        assert!(s.gaps.is_empty());
        let s = detect_gaps(TimeSeries::new("x", Quantity::AirTemp), Duration::minutes(20), 1.5);
        assert!(s.gaps.is_empty());
    }

    #[test]
    fn out_of_range_readings_do_not_bridge_gaps() {
        let mut s = series(&[0, 20, 40, 60]);
        s.readings[1].quality = Quality::OutOfRange;
        s.readings[2].quality = Quality::OutOfRange;
        let s = detect_gaps(s, Duration::minutes(20), 1.5);
        assert_eq!(s.gaps, vec![Gap { start: at(0), end: at(60) }]);
    }

    proptest! {
        #[test]
        fn gap_detection_is_idempotent_and_saturates(
            steps in proptest::collection::vec(1i64..200, 0..60),
            factor in 1.0f64..4.0,
        ) {
            let mut t = 0;
            let mut mins = vec![0];
            for s in &steps { t += s; mins.push(t); }
            let s = series(&mins);
            let once = detect_gaps(s, Duration::minutes(20), factor);
            let twice = detect_gaps(once.clone(), Duration::minutes(20), factor);
            prop_assert_eq!(&once, &twice);
            // readings untouched
            prop_assert_eq!(once.readings.len(), mins.len());
            // every gap is longer than the limit, every non-gap is not
            for w in once.readings.windows(2) {
                let d = (w[1].timestamp - w[0].timestamp).num_minutes() as f64;
                let is_gap = once.gaps.iter().any(|g| g.start == w[0].timestamp);
                prop_assert_eq!(is_gap, d > 20.0 * factor);
            }
            // a factor beyond the widest spacing yields no gaps
            let widest = steps.iter().copied().max().unwrap_or(0) as f64;
            let big = widest / 20.0 + 1.0;
            let none = detect_gaps(once, Duration::minutes(20), big.max(factor));
            prop_assert!(none.gaps.is_empty());
        }
    }
}
