//! Nearest-within-tolerance alignment of several series onto a common
//! regular grid.
//!
//! A grid cell takes the ok reading closest to the grid instant if it lies
//! within `tolerance`, otherwise it is missing. Because `tolerance` must be
//! below half the grid interval, a reading can serve at most one cell.
//! Linear interpolation is available only as an explicit option.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::sensor::Quantity;
use super::series::{Quality, TimeSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub start: DateTime<Utc>,
    pub interval: Duration,
    pub len: usize,
}

impl Grid {
    pub fn time(&self, i: usize) -> DateTime<Utc> {
        self.start + self.interval * i as i32
    }

    pub fn times(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        (0..self.len).map(|i| self.time(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub quality: Quality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedColumn {
    pub sensor_id: String,
    pub quantity: Quantity,
    pub unit: String,
    pub cells: Vec<Option<Sample>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    pub grid: Grid,
    pub columns: Vec<AlignedColumn>,
}

impl AlignedFrame {
    pub fn column(&self, sensor_id: &str, quantity: Quantity) -> Option<&AlignedColumn> {
        self.columns
            .iter()
            .find(|c| c.sensor_id == sensor_id && c.quantity == quantity)
    }

    pub fn series(&self, sensor_id: &str, quantity: Quantity) -> Option<GridSeries> {
        self.column(sensor_id, quantity).map(|c| GridSeries {
            grid: self.grid,
            values: c.cells.iter().map(|s| s.map(|s| s.value)).collect(),
        })
    }
}

/// One channel sampled on a grid; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeries {
    pub grid: Grid,
    pub values: Vec<Option<f64>>,
}

impl GridSeries {
    pub fn new(start: DateTime<Utc>, interval: Duration, values: Vec<Option<f64>>) -> Self {
        GridSeries {
            grid: Grid {
                start,
                interval,
                len: values.len(),
            },
            values,
        }
    }

    pub fn from_values(start: DateTime<Utc>, interval: Duration, values: &[f64]) -> Self {
        GridSeries::new(start, interval, values.iter().copied().map(Some).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    pub grid_interval: Duration,
    pub tolerance: Duration,
    /// First grid instant. Defaults to the earliest ok reading rounded down
    /// to a multiple of `grid_interval` since the Unix epoch.
    pub origin: Option<DateTime<Utc>>,
    /// Fill cells with no reading within tolerance by linear interpolation
    /// between neighbours no further apart than this span.
    pub interpolate_within: Option<Duration>,
}

impl AlignOptions {
    pub fn new(grid_interval: Duration, tolerance: Duration) -> Self {
        AlignOptions {
            grid_interval,
            tolerance,
            origin: None,
            interpolate_within: None,
        }
    }
}

pub fn align_series(
    series: &[TimeSeries],
    grid_interval: Duration,
    tolerance: Duration,
) -> Result<AlignedFrame> {
    align_series_with(series, &AlignOptions::new(grid_interval, tolerance))
}

pub fn align_series_with(series: &[TimeSeries], opts: &AlignOptions) -> Result<AlignedFrame> {
    let interval = opts.grid_interval;
    if interval <= Duration::zero() {
        return Err(Error::InvalidParameter("grid interval must be positive".into()));
    }
    if opts.tolerance < Duration::zero() || opts.tolerance * 2 >= interval {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} min must be below half the grid interval {} min",
            opts.tolerance.num_minutes(),
            interval.num_minutes()
        )));
    }
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            if a.quantity == b.quantity && a.unit != b.unit {
                return Err(Error::IncompatibleUnits {
                    quantity: a.quantity.to_string(),
                    first: a.unit.clone(),
                    second: b.unit.clone(),
                });
            }
        }
    }

    let ok: Vec<Vec<(DateTime<Utc>, f64)>> = series
        .iter()
        .map(|s| s.ok_readings().map(|r| (r.timestamp, r.value)).collect())
        .collect();
    let first = ok.iter().filter_map(|v| v.first()).map(|p| p.0).min();
    let last = ok.iter().filter_map(|v| v.last()).map(|p| p.0).max();

    let grid = match (first, last) {
        (Some(first), Some(last)) => {
            let start = opts.origin.unwrap_or_else(|| floor_to(first, interval));
            let len = if last < start {
                0
            } else {
                let span = (last - start).num_milliseconds();
                let step = interval.num_milliseconds();
                let mut n = span / step + 1;
                if step - span % step <= opts.tolerance.num_milliseconds() && span % step != 0 {
                    n += 1;
                }
                n as usize
            };
            Grid { start, interval, len }
        }
        _ => Grid {
            start: opts.origin.unwrap_or(DateTime::UNIX_EPOCH),
            interval,
            len: 0,
        },
    };

    let columns = series
        .iter()
        .zip(&ok)
        .map(|(s, points)| AlignedColumn {
            sensor_id: s.sensor_id.clone(),
            quantity: s.quantity,
            unit: s.unit.clone(),
            cells: grid.times().map(|g| cell_at(points, g, opts)).collect(),
        })
        .collect();
    Ok(AlignedFrame { grid, columns })
}

fn floor_to(t: DateTime<Utc>, interval: Duration) -> DateTime<Utc> {
    let step = interval.num_milliseconds();
    let ms = t.timestamp_millis();
    DateTime::from_timestamp_millis(ms - ms.rem_euclid(step)).expect("in range")
}

fn cell_at(points: &[(DateTime<Utc>, f64)], g: DateTime<Utc>, opts: &AlignOptions) -> Option<Sample> {
    let idx = points.partition_point(|p| p.0 < g);
    let before = idx.checked_sub(1).map(|i| points[i]);
    let after = points.get(idx).copied();
    let nearest = match (before, after) {
        (Some(b), Some(a)) => {
            // ties go to the earlier reading
            if a.0 - g < g - b.0 { Some(a) } else { Some(b) }
        }
        (b, a) => b.or(a),
    };
    if let Some((t, v)) = nearest {
        if (t - g).abs() <= opts.tolerance {
            return Some(Sample {
                value: v,
                quality: Quality::Ok,
            });
        }
    }
    let span = opts.interpolate_within?;
    let (b, a) = (before?, after?);
    if a.0 - b.0 > span {
        return None;
    }
    let frac = (g - b.0).num_milliseconds() as f64 / (a.0 - b.0).num_milliseconds() as f64;
    Some(Sample {
        value: b.1 + (a.1 - b.1) * frac,
        quality: Quality::Interpolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::series::Reading;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn at(min: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap() + Duration::minutes(min)
    }

    fn ts(id: &str, q: Quantity, pts: &[(i64, f64)]) -> TimeSeries {
        TimeSeries::from_points(id, q, pts.iter().map(|&(m, v)| (at(m), v)))
    }

    #[test]
    fn twenty_and_sixty_minute_series_on_hourly_grid() {
        let t: Vec<(i64, f64)> = (0..=9).map(|i| (i * 20, 10.0 + i as f64)).collect();
        let crack: Vec<(i64, f64)> = (0..=3).map(|i| (i * 60, 0.5 + 0.01 * i as f64)).collect();
        let frame = align_series(
            &[ts("TH", Quantity::AirTemp, &t), ts("F1", Quantity::CrackWidth, &crack)],
            Duration::minutes(60),
            Duration::minutes(10),
        )
        .unwrap();
        assert_eq!(frame.grid.start, at(0));
        assert_eq!(frame.grid.len, 4);
        let tcol = frame.series("TH", Quantity::AirTemp).unwrap();
        assert_eq!(tcol.values, vec![Some(10.0), Some(13.0), Some(16.0), Some(19.0)]);
        let ccol = frame.series("F1", Quantity::CrackWidth).unwrap();
        assert!(ccol.values.iter().all(Option::is_some));
        assert_eq!(ccol.values[3], Some(0.53));
    }

    #[test]
    fn native_grid_is_identity() {
        let pts: Vec<(i64, f64)> = (0..30).map(|i| (i * 20, (i as f64).sin())).collect();
        let s = ts("TH", Quantity::AirTemp, &pts);
        let frame = align_series(&[s.clone()], Duration::minutes(20), Duration::minutes(5)).unwrap();
        let col = frame.series("TH", Quantity::AirTemp).unwrap();
        let times: Vec<_> = frame.grid.times().collect();
        assert_eq!(times, s.readings.iter().map(|r| r.timestamp).collect::<Vec<_>>());
        assert_eq!(col.values, s.readings.iter().map(|r| Some(r.value)).collect::<Vec<_>>());
    }

    #[test]
    fn reading_outside_tolerance_is_missing() {
        let s = ts("TH", Quantity::AirTemp, &[(0, 1.0), (91, 2.0), (120, 3.0)]);
        let frame = align_series(&[s], Duration::minutes(60), Duration::minutes(10)).unwrap();
        let col = frame.series("TH", Quantity::AirTemp).unwrap();
        // 91 is 31 min from the 60-min point and 29 from 120
        assert_eq!(col.values, vec![Some(1.0), None, Some(3.0)]);
    }

    #[test]
    fn tolerance_must_be_below_half_interval() {
        let s = ts("TH", Quantity::AirTemp, &[(0, 1.0)]);
        assert!(align_series(&[s], Duration::minutes(20), Duration::minutes(10)).is_err());
    }

    #[test]
    fn unit_disagreement_is_rejected() {
        let a = ts("A", Quantity::AirTemp, &[(0, 1.0)]);
        let mut b = ts("B", Quantity::AirTemp, &[(0, 1.0)]);
        b.unit = "°F".into();
        assert!(matches!(
            align_series(&[a, b], Duration::minutes(20), Duration::minutes(5)),
            Err(Error::IncompatibleUnits { .. })
        ));
    }

    #[test]
    fn non_ok_readings_are_not_used() {
        let mut s = ts("TH", Quantity::AirTemp, &[(0, 1.0), (20, 99.0), (40, 3.0)]);
        s.readings[1].quality = Quality::OutOfRange;
        let frame = align_series(&[s], Duration::minutes(20), Duration::minutes(5)).unwrap();
        let col = frame.series("TH", Quantity::AirTemp).unwrap();
        assert_eq!(col.values, vec![Some(1.0), None, Some(3.0)]);
    }

    #[test]
    fn interpolation_is_opt_in() {
        let s = ts("TH", Quantity::AirTemp, &[(0, 0.0), (40, 4.0)]);
        let mut opts = AlignOptions::new(Duration::minutes(20), Duration::minutes(5));
        let plain = align_series_with(&[s.clone()], &opts).unwrap();
        assert_eq!(plain.columns[0].cells[1], None);
        opts.interpolate_within = Some(Duration::minutes(60));
        let filled = align_series_with(&[s], &opts).unwrap();
        assert_eq!(
            filled.columns[0].cells[1],
            Some(Sample {
                value: 2.0,
                quality: Quality::Interpolated
            })
        );
    }

    proptest! {
        #[test]
        fn never_invents_values(
            offsets in proptest::collection::btree_set(0i64..5_000, 1..80),
            grid in prop::sample::select(vec![20i64, 30, 60]),
            tol_frac in 0.0f64..0.49,
        ) {
            let pts: Vec<(i64, f64)> = offsets.iter().map(|&m| (m, m as f64 * 0.25)).collect();
            let s = ts("X", Quantity::CrackWidth, &pts);
            let tol = Duration::seconds(((grid * 60) as f64 * tol_frac) as i64);
            let frame = align_series(&[s.clone()], Duration::minutes(grid), tol).unwrap();
            let mut used = std::collections::HashSet::new();
            for (g, cell) in frame.grid.times().zip(&frame.columns[0].cells) {
                if let Some(c) = cell {
                    let src: Vec<&Reading> = s.readings.iter().filter(|r| r.value == c.value).collect();
                    prop_assert_eq!(src.len(), 1);
                    prop_assert!((src[0].timestamp - g).abs() <= tol);
                    prop_assert!(used.insert(src[0].timestamp));
                }
            }
        }
    }
}
