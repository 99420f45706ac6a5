use std::collections::BTreeMap;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::ingest::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
}

/// "`qualifying` out of `evaluable` days".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DayCount {
    pub qualifying_days: usize,
    pub evaluable_days: usize,
}

impl std::fmt::Display for DayCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} out of {} days", self.qualifying_days, self.evaluable_days)
    }
}

/// Counts local calendar days on which at least one ok reading is strictly
/// beyond `threshold`. Only days with at least `min_samples_per_day` ok
/// readings are evaluable, and only evaluable days can qualify.
pub fn count_threshold_days(
    series: &TimeSeries,
    threshold: f64,
    direction: Direction,
    min_samples_per_day: usize,
    timezone: Tz,
) -> Result<DayCount> {
    if min_samples_per_day == 0 {
        return Err(Error::InvalidParameter("min_samples_per_day must be ≥ 1".into()));
    }
    let mut days: BTreeMap<NaiveDate, (usize, bool)> = BTreeMap::new();
    for r in series.ok_readings() {
        let day = r.timestamp.with_timezone(&timezone).date_naive();
        let hit = match direction {
            Direction::Above => r.value > threshold,
            Direction::Below => r.value < threshold,
        };
        let e = days.entry(day).or_default();
        e.0 += 1;
        e.1 |= hit;
    }
    let evaluable = days.values().filter(|(n, _)| *n >= min_samples_per_day);
    let (mut q, mut e) = (0, 0);
    for (_, hit) in evaluable {
        e += 1;
        q += usize::from(*hit);
    }
    Ok(DayCount {
        qualifying_days: q,
        evaluable_days: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Quality, Quantity};
    use chrono::{Duration, TimeZone, Utc};

    fn rh(points: &[(i64, f64)]) -> TimeSeries {
        let t0 = Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap();
        TimeSeries::from_points("TH", Quantity::RelHumidity, points.iter().map(|&(h, v)| (t0 + Duration::hours(h), v)))
    }

    #[test]
    fn three_day_fixture() {
        let s = rh(&[(1, 95.0), (12, 60.0), (25, 80.0), (36, 85.0), (50, 70.0), (60, 91.0)]);
        let c = count_threshold_days(&s, 90.0, Direction::Above, 1, chrono_tz::UTC).unwrap();
        assert_eq!(c, DayCount { qualifying_days: 2, evaluable_days: 3 });
        assert_eq!(c.to_string(), "2 out of 3 days");
    }

    #[test]
    fn empty_series() {
        let s = rh(&[]);
        let c = count_threshold_days(&s, 90.0, Direction::Above, 1, chrono_tz::UTC).unwrap();
        assert_eq!(c, DayCount::default());
    }

    #[test]
    fn only_out_of_range_readings_is_not_evaluable() {
        let mut s = rh(&[(1, 105.0), (2, 104.0), (30, 95.0)]);
        s.readings[0].quality = Quality::OutOfRange;
        s.readings[1].quality = Quality::OutOfRange;
        let c = count_threshold_days(&s, 90.0, Direction::Above, 1, chrono_tz::UTC).unwrap();
        assert_eq!(c, DayCount { qualifying_days: 1, evaluable_days: 1 });
    }

    #[test]
    fn min_samples_and_direction() {
        let s = rh(&[(1, 95.0), (25, 20.0), (26, 40.0)]);
        let c = count_threshold_days(&s, 90.0, Direction::Above, 2, chrono_tz::UTC).unwrap();
        assert_eq!(c, DayCount { qualifying_days: 0, evaluable_days: 1 });
        let c = count_threshold_days(&s, 30.0, Direction::Below, 1, chrono_tz::UTC).unwrap();
        assert_eq!(c, DayCount { qualifying_days: 1, evaluable_days: 2 });
        assert!(count_threshold_days(&s, 30.0, Direction::Below, 0, chrono_tz::UTC).is_err());
    }

    #[test]
    fn day_boundaries_follow_local_time() {
        // 22:30 UTC on 17 May is 00:30 on 18 May in Paris
        let s = rh(&[(10, 50.0), (22, 95.0)]);
        let utc = count_threshold_days(&s, 90.0, Direction::Above, 1, chrono_tz::UTC).unwrap();
        let paris = count_threshold_days(&s, 90.0, Direction::Above, 1, chrono_tz::Europe::Paris).unwrap();
        assert_eq!(utc.evaluable_days, 1);
        assert_eq!(paris.evaluable_days, 2);
    }
}
