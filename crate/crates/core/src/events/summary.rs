//! Period statistics and face-to-face comparisons.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::{Face, TimeSeries};
use crate::time::Period;
use crate::{Error, Result};

/// Mean and extremes of one channel's ok readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl ChannelStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<ChannelStats> {
        let mut n = 0usize;
        let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| ChannelStats {
            mean: sum / n as f64,
            min,
            max,
            n,
        })
    }

    /// Statistics of the union of two disjoint samples.
    pub fn merge(&self, other: &ChannelStats) -> ChannelStats {
        let n = self.n + other.n;
        ChannelStats {
            mean: (self.mean * self.n as f64 + other.mean * other.n as f64) / n as f64,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
            n,
        }
    }
}

fn stats_in(series: Option<&TimeSeries>, period: &Period) -> Option<ChannelStats> {
    ChannelStats::from_values(
        series?
            .ok_readings()
            .filter(|r| period.contains(r.timestamp))
            .map(|r| r.value),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period: Period,
    pub air_temp: Option<ChannelStats>,
    pub surface_temp: Option<ChannelStats>,
    pub rel_humidity: Option<ChannelStats>,
}

fn comma1(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.1}").replace('.', ","),
        None => "n/a".to_string(),
    }
}

impl PeriodSummary {
    pub fn avg_t(&self) -> Option<f64> {
        self.air_temp.map(|s| s.mean)
    }
    pub fn avg_ts(&self) -> Option<f64> {
        self.surface_temp.map(|s| s.mean)
    }
    pub fn avg_rh(&self) -> Option<f64> {
        self.rel_humidity.map(|s| s.mean)
    }
    pub fn t_max(&self) -> Option<f64> {
        self.air_temp.map(|s| s.max)
    }
    pub fn t_min(&self) -> Option<f64> {
        self.air_temp.map(|s| s.min)
    }
    pub fn rh_max(&self) -> Option<f64> {
        self.rel_humidity.map(|s| s.max)
    }
    pub fn rh_min(&self) -> Option<f64> {
        self.rel_humidity.map(|s| s.min)
    }

    pub fn sample_counts(&self) -> BTreeMap<&'static str, usize> {
        [
            ("air_temp", self.air_temp),
            ("surface_temp", self.surface_temp),
            ("rel_humidity", self.rel_humidity),
        ]
        .into_iter()
        .map(|(k, s)| (k, s.map_or(0, |s| s.n)))
        .collect()
    }

    /// `avg T / avg Ts / avg RH / T max / T min / RH max / RH min`, one
    /// decimal, decimal comma, as in the site's climate tables.
    pub fn table_row(&self) -> String {
        [
            self.avg_t(),
            self.avg_ts(),
            self.avg_rh(),
            self.t_max(),
            self.t_min(),
            self.rh_max(),
            self.rh_min(),
        ]
        .into_iter()
        .map(comma1)
        .collect::<Vec<_>>()
        .join(" / ")
    }

    /// Summary of two adjacent periods. Fails unless `other` starts where
    /// `self` ends.
    pub fn merge(&self, other: &PeriodSummary) -> Result<PeriodSummary> {
        if self.period.end != other.period.start {
            return Err(Error::InvalidParameter("periods are not adjacent".into()));
        }
        let m = |a: Option<ChannelStats>, b: Option<ChannelStats>| match (a, b) {
            (Some(a), Some(b)) => Some(a.merge(&b)),
            (a, b) => a.or(b),
        };
        Ok(PeriodSummary {
            period: Period {
                start: self.period.start,
                end: other.period.end,
            },
            air_temp: m(self.air_temp, other.air_temp),
            surface_temp: m(self.surface_temp, other.surface_temp),
            rel_humidity: m(self.rel_humidity, other.rel_humidity),
        })
    }
}

/// Statistics over the ok readings inside `period`. Channels without data
/// come back as `None`, never as zeros.
pub fn period_summary(
    air_temp: Option<&TimeSeries>,
    surface_temp: Option<&TimeSeries>,
    rel_humidity: Option<&TimeSeries>,
    period: Period,
) -> Result<PeriodSummary> {
    let summary = PeriodSummary {
        period,
        air_temp: stats_in(air_temp, &period),
        surface_temp: stats_in(surface_temp, &period),
        rel_humidity: stats_in(rel_humidity, &period),
    };
    if summary.air_temp.is_none() && summary.surface_temp.is_none() && summary.rel_humidity.is_none() {
        return Err(Error::NoData(format!("no ok reading in {period}")));
    }
    Ok(summary)
}

pub struct FaceClimate<'a> {
    pub face: Face,
    pub air_temp: &'a TimeSeries,
    pub rel_humidity: Option<&'a TimeSeries>,
}

/// `face_b − face_a` differences of mean temperature and humidity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceComparison {
    pub face_a: Face,
    pub face_b: Face,
    pub delta_avg_t: f64,
    pub delta_avg_rh: Option<f64>,
    pub first_common: DateTime<Utc>,
    pub last_common: DateTime<Utc>,
    pub n_t: usize,
    pub n_rh: usize,
}

fn paired_means(a: &TimeSeries, b: &TimeSeries) -> Option<(f64, f64, usize, DateTime<Utc>, DateTime<Utc>)> {
    let bv: BTreeMap<DateTime<Utc>, f64> = b.ok_readings().map(|r| (r.timestamp, r.value)).collect();
    let (mut sa, mut sb, mut n) = (0.0, 0.0, 0usize);
    let (mut first, mut last) = (None, None);
    for r in a.ok_readings() {
        if let Some(v) = bv.get(&r.timestamp) {
            sa += r.value;
            sb += v;
            n += 1;
            first.get_or_insert(r.timestamp);
            last = Some(r.timestamp);
        }
    }
    (n > 0).then(|| (sa / n as f64, sb / n as f64, n, first.unwrap(), last.unwrap()))
}

/// Compares two faces over the timestamps where both have ok readings.
/// Series from unsynchronised loggers should be aligned first.
pub fn compare_faces(a: &FaceClimate<'_>, b: &FaceClimate<'_>) -> Result<FaceComparison> {
    let (ta, tb, n_t, first_common, last_common) =
        paired_means(a.air_temp, b.air_temp).ok_or(Error::NoOverlap)?;
    let rh = match (a.rel_humidity, b.rel_humidity) {
        (Some(x), Some(y)) => paired_means(x, y),
        _ => None,
    };
    Ok(FaceComparison {
        face_a: a.face,
        face_b: b.face,
        delta_avg_t: tb - ta,
        delta_avg_rh: rh.map(|(x, y, ..)| y - x),
        first_common,
        last_common,
        n_t,
        n_rh: rh.map_or(0, |r| r.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Quality, Quantity};
    use chrono::{Duration, TimeZone};
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap()
    }

    fn s(q: Quantity, vals: &[f64]) -> TimeSeries {
        TimeSeries::from_points("X", q, vals.iter().enumerate().map(|(i, v)| (t0() + Duration::minutes(20 * i as i64), *v)))
    }

    fn whole() -> Period {
        Period::new(t0(), t0() + Duration::days(365)).unwrap()
    }

    #[test]
    fn arithmetic_oracle() {
        let t = s(Quantity::AirTemp, &[10.0, 20.0, 30.0]);
        let p = period_summary(Some(&t), None, None, whole()).unwrap();
        assert_eq!(p.avg_t(), Some(20.0));
        assert_eq!(p.t_max(), Some(30.0));
        assert_eq!(p.t_min(), Some(10.0));
        assert_eq!(p.avg_ts(), None);
        assert_eq!(p.sample_counts()["surface_temp"], 0);
    }

    #[test]
    fn single_reading() {
        let t = s(Quantity::AirTemp, &[14.5]);
        let p = period_summary(Some(&t), None, None, whole()).unwrap();
        assert_eq!((p.avg_t(), p.t_min(), p.t_max()), (Some(14.5), Some(14.5), Some(14.5)));
    }

    #[test]
    fn table_row_rendering() {
        // avg 19.8 with extremes 39.6 / 9.2; avg 70.5 with extremes 100 / 29.5
        let t = s(Quantity::AirTemp, &[39.6, 9.2, 10.6]);
        let ts = s(Quantity::SurfaceTemp, &[20.9, 20.9, 20.9]);
        let rh = s(Quantity::RelHumidity, &[100.0, 29.5, 82.0]);
        let p = period_summary(Some(&t), Some(&ts), Some(&rh), whole()).unwrap();
        assert_eq!(p.table_row(), "19,8 / 20,9 / 70,5 / 39,6 / 9,2 / 100,0 / 29,5");
    }

    #[test]
    fn only_ok_readings_inside_period_count() {
        let mut t = s(Quantity::AirTemp, &[10.0, 99.0, 30.0, 50.0]);
        t.readings[1].quality = Quality::OutOfRange;
        let p = Period::new(t0(), t0() + Duration::minutes(50)).unwrap();
        let sum = period_summary(Some(&t), None, None, p).unwrap();
        assert_eq!(sum.avg_t(), Some(20.0));
        assert_eq!(sum.air_temp.unwrap().n, 2);
        let empty = Period::new(t0() - Duration::days(2), t0() - Duration::days(1)).unwrap();
        assert!(matches!(period_summary(Some(&t), None, None, empty), Err(Error::NoData(_))));
    }

    #[test]
    fn face_comparisons() {
        let ne: Vec<f64> = (0..50).map(|i| 15.0 + (i as f64 * 0.3).sin() * 5.0).collect();
        let sw: Vec<f64> = ne.iter().map(|v| v + 1.0).collect();
        let (a, b) = (s(Quantity::AirTemp, &ne), s(Quantity::AirTemp, &sw));
        let rh = s(Quantity::RelHumidity, &[70.0; 50]);
        let cmp = compare_faces(
            &FaceClimate { face: Face::Ne, air_temp: &a, rel_humidity: Some(&rh) },
            &FaceClimate { face: Face::Sw, air_temp: &b, rel_humidity: Some(&rh) },
        )
        .unwrap();
        assert!((cmp.delta_avg_t - 1.0).abs() < 1e-12);
        assert_eq!(cmp.delta_avg_rh, Some(0.0));
        assert_eq!(cmp.n_t, 50);

        let same = compare_faces(
            &FaceClimate { face: Face::Ne, air_temp: &a, rel_humidity: None },
            &FaceClimate { face: Face::Sw, air_temp: &a, rel_humidity: None },
        )
        .unwrap();
        assert_eq!(same.delta_avg_t, 0.0);
        assert_eq!(same.delta_avg_rh, None);

        let mut later = a.clone();
        for r in &mut later.readings {
            r.timestamp += Duration::days(30);
        }
        assert!(matches!(
            compare_faces(
                &FaceClimate { face: Face::Ne, air_temp: &a, rel_humidity: None },
                &FaceClimate { face: Face::Sw, air_temp: &later, rel_humidity: None },
            ),
            Err(Error::NoOverlap)
        ));
    }

    proptest! {
        #[test]
        fn adjacent_periods_merge(
            vals in proptest::collection::vec(-20.0f64..40.0, 2..100),
            split in 1usize..99,
        ) {
            let split = split.min(vals.len() - 1);
            let t = s(Quantity::AirTemp, &vals);
            let cut = t0() + Duration::minutes(20 * split as i64);
            let end = t0() + Duration::days(10);
            let a = period_summary(Some(&t), None, None, Period::new(t0(), cut).unwrap()).unwrap();
            let b = period_summary(Some(&t), None, None, Period::new(cut, end).unwrap()).unwrap();
            let whole = period_summary(Some(&t), None, None, Period::new(t0(), end).unwrap()).unwrap();
            let merged = a.merge(&b).unwrap();
            let (m, w) = (merged.air_temp.unwrap(), whole.air_temp.unwrap());
            prop_assert_eq!(m.max, w.max);
            prop_assert_eq!(m.min, w.min);
            prop_assert_eq!(m.n, w.n);
            prop_assert!((m.mean - w.mean).abs() < 1e-9);
            prop_assert!(w.min <= w.mean + 1e-12 && w.mean <= w.max + 1e-12);
        }
    }
}
