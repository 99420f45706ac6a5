//! Event counters built on small hysteresis state machines.
//!
//! * Condensation: an event opens when the surface temperature reaches the
//!   dew point (`Ts − Td ≤ 0`) and closes once the margin climbs back to the
//!   hysteresis. Counts are event onsets, not samples, so they do not scale
//!   with the logging cadence.
//! * Freeze–thaw and soaking–drying: one cycle per `high → low → high`
//!   traversal of a two-threshold band. A series that starts low must first
//!   be seen high before its first cycle can begin.
//!
//! Missing cells (and non-ok readings) leave the state untouched.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::dewpoint::{dew_point_with, MagnusCoefficients};
use crate::ingest::{GridSeries, TimeSeries};
use crate::time::Period;
use crate::{Error, Result};

pub const DEFAULT_CONDENSATION_HYSTERESIS: f64 = 0.2;
pub const DEFAULT_FREEZE_THRESHOLD: f64 = 0.0;
pub const DEFAULT_FREEZE_HYSTERESIS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    FreezeThaw,
    SoakingDrying,
    Condensation,
}

impl CycleKind {
    pub fn label(self) -> &'static str {
        match self {
            CycleKind::FreezeThaw => "freeze_thaw",
            CycleKind::SoakingDrying => "soaking_drying",
            CycleKind::Condensation => "condensation",
        }
    }
}

/// One completed `high → low → high` traversal: `start` is the first low
/// sample, `end` the first sample back high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCount {
    pub kind: CycleKind,
    pub count: usize,
    pub period: Option<Period>,
    pub parameters: BTreeMap<String, f64>,
    pub cycles: Vec<Cycle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Unknown,
    High,
    Low { since: usize, armed: bool },
}

/// Index spans `(first low, first high again)` of every completed
/// `high → low → high` traversal. High is `v > upper`, low is `v < lower`.
pub fn two_threshold_cycles(values: &[Option<f64>], upper: f64, lower: f64) -> Vec<(usize, usize)> {
    let mut state = Band::Unknown;
    let mut spans = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let Some(v) = *v else { continue };
        if v > upper {
            if let Band::Low { since, armed: true } = state {
                spans.push((since, i));
            }
            state = Band::High;
        } else if v < lower {
            state = match state {
                Band::High => Band::Low {
                    since: i,
                    armed: true,
                },
                Band::Unknown => Band::Low {
                    since: i,
                    armed: false,
                },
                low => low,
            };
        }
    }
    spans
}

fn period_of(series: &TimeSeries) -> Option<Period> {
    let (a, b) = series.span()?;
    Period::new(a, b + chrono::Duration::milliseconds(1)).ok()
}

fn series_cycles(series: &TimeSeries, upper: f64, lower: f64) -> Vec<Cycle> {
    let values: Vec<Option<f64>> = series
        .readings
        .iter()
        .map(|r| r.is_ok().then_some(r.value))
        .collect();
    two_threshold_cycles(&values, upper, lower)
        .into_iter()
        .map(|(s, e)| Cycle {
            start: series.readings[s].timestamp,
            end: series.readings[e].timestamp,
        })
        .collect()
}

pub fn count_freeze_thaw_cycles(series: &TimeSeries, threshold: f64, hysteresis: f64) -> Result<CycleCount> {
    if !(hysteresis >= 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "freeze-thaw threshold {threshold} / hysteresis {hysteresis}"
        )));
    }
    let cycles = series_cycles(series, threshold + hysteresis, threshold - hysteresis);
    Ok(CycleCount {
        kind: CycleKind::FreezeThaw,
        count: cycles.len(),
        period: period_of(series),
        parameters: BTreeMap::from([
            ("threshold".to_string(), threshold),
            ("hysteresis".to_string(), hysteresis),
        ]),
        cycles,
    })
}

/// Wet/dry thresholds for masonry water content. There is no default: both
/// must come from site configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoakingThresholds {
    pub wet: f64,
    pub dry: f64,
}

impl SoakingThresholds {
    pub fn new(wet: Option<f64>, dry: Option<f64>) -> Result<Self> {
        match (wet, dry) {
            (Some(wet), Some(dry)) if dry < wet => Ok(SoakingThresholds { wet, dry }),
            (Some(wet), Some(dry)) => Err(Error::Config(format!(
                "soaking/drying thresholds inverted: dry {dry} must be below wet {wet}"
            ))),
            _ => Err(Error::Config(
                "soaking/drying thresholds (wet and dry water content) must be configured".into(),
            )),
        }
    }
}

pub fn count_soaking_drying_cycles(series: &TimeSeries, thresholds: &SoakingThresholds) -> CycleCount {
    let cycles = series_cycles(series, thresholds.wet, thresholds.dry);
    CycleCount {
        kind: CycleKind::SoakingDrying,
        count: cycles.len(),
        period: period_of(series),
        parameters: BTreeMap::from([
            ("wet_threshold".to_string(), thresholds.wet),
            ("dry_threshold".to_string(), thresholds.dry),
        ]),
        cycles,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensationEvent {
    pub onset: DateTime<Utc>,
    /// `None` while the event is still open at the end of the data.
    pub end: Option<DateTime<Utc>>,
    /// Most negative `Ts − Td` during the event, °C.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensationReport {
    pub events: Vec<CondensationEvent>,
    /// Grid cells with `Ts ≤ Td`, reported beside the event count.
    pub samples_at_or_below_dew_point: usize,
    pub evaluated_samples: usize,
    pub hysteresis: f64,
    pub coefficients: MagnusCoefficients,
}

impl CondensationReport {
    pub fn count(&self) -> usize {
        self.events.len()
    }
}

/// `(onset index, closing index, min margin)` for each event over a margin
/// sequence `Ts − Td`.
pub fn condensation_spans(margins: &[Option<f64>], hysteresis: f64) -> Vec<(usize, Option<usize>, f64)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, f64)> = None;
    for (i, m) in margins.iter().enumerate() {
        let Some(m) = *m else { continue };
        match open {
            None if m <= 0.0 => open = Some((i, m)),
            None => {}
            Some((onset, _)) if m >= hysteresis => {
                let (_, min) = open.take().expect("open");
                spans.push((onset, Some(i), min));
            }
            Some((onset, min)) => open = Some((onset, min.min(m))),
        }
    }
    if let Some((onset, min)) = open {
        spans.push((onset, None, min));
    }
    spans
}

fn check_hysteresis(h: f64) -> Result<()> {
    if h >= 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("hysteresis {h} must be ≥ 0")))
    }
}

/// Events from a precomputed margin series on `grid`.
pub fn condensation_from_margins(
    grid: &crate::ingest::Grid,
    margins: &[Option<f64>],
    hysteresis: f64,
    coefficients: MagnusCoefficients,
) -> Result<CondensationReport> {
    check_hysteresis(hysteresis)?;
    if margins.len() != grid.len {
        return Err(Error::MisalignedInput);
    }
    let events = condensation_spans(margins, hysteresis)
        .into_iter()
        .map(|(onset, end, min_margin)| CondensationEvent {
            onset: grid.time(onset),
            end: end.map(|e| grid.time(e)),
            min_margin,
        })
        .collect();
    Ok(CondensationReport {
        events,
        samples_at_or_below_dew_point: margins.iter().flatten().filter(|m| **m <= 0.0).count(),
        evaluated_samples: margins.iter().flatten().count(),
        hysteresis,
        coefficients,
    })
}

/// Condensation events from surface temperature, air temperature and
/// relative humidity sampled on one grid. Cells where any input is missing,
/// or where the dew point is undefined, neither open nor close an event.
pub fn detect_condensation_events(
    surface_temp: &GridSeries,
    air_temp: &GridSeries,
    rel_humidity: &GridSeries,
    hysteresis: f64,
) -> Result<CondensationReport> {
    detect_condensation_events_with(
        surface_temp,
        air_temp,
        rel_humidity,
        hysteresis,
        MagnusCoefficients::default(),
    )
}

pub fn detect_condensation_events_with(
    surface_temp: &GridSeries,
    air_temp: &GridSeries,
    rel_humidity: &GridSeries,
    hysteresis: f64,
    coefficients: MagnusCoefficients,
) -> Result<CondensationReport> {
    if surface_temp.grid != air_temp.grid || surface_temp.grid != rel_humidity.grid {
        return Err(Error::MisalignedInput);
    }
    let margins: Vec<Option<f64>> = surface_temp
        .values
        .iter()
        .zip(&air_temp.values)
        .zip(&rel_humidity.values)
        .map(|((ts, t), rh)| {
            let td = dew_point_with((*t)?, (*rh)?, coefficients).ok()?;
            Some((*ts)? - td)
        })
        .collect();
    condensation_from_margins(&surface_temp.grid, &margins, hysteresis, coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Quantity;
    use chrono::{Duration, TimeZone};
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    fn grid(values: &[f64]) -> GridSeries {
        GridSeries::from_values(t0(), Duration::minutes(20), values)
    }

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::from_points(
            "S",
            Quantity::AirTemp,
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (t0() + Duration::hours(i as i64), *v)),
        )
    }

    #[test]
    fn condensation_hand_traced() {
        // Ts = 10, Td = [8, 11, 9, 11, 8] → margins [2, -1, 1, -1, 2]
        let margins: Vec<Option<f64>> = [8.0, 11.0, 9.0, 11.0, 8.0].iter().map(|td| Some(10.0 - td)).collect();
        let g = grid(&[0.0; 5]).grid;
        let r = condensation_from_margins(&g, &margins, 0.2, MagnusCoefficients::default()).unwrap();
        assert_eq!(r.count(), 2);
        assert_eq!(r.events[0].onset, g.time(1));
        assert_eq!(r.events[0].end, Some(g.time(2)));
        assert_eq!(r.events[0].min_margin, -1.0);
        assert_eq!(r.samples_at_or_below_dew_point, 2);
    }

    #[test]
    fn saturated_air_at_surface_temperature_is_one_long_event() {
        let vals = [12.0, 11.5, 13.0, 14.2, 9.9];
        let r = detect_condensation_events(&grid(&vals), &grid(&vals), &grid(&[100.0; 5]), 0.2).unwrap();
        assert_eq!(r.count(), 1);
        assert_eq!(r.events[0].onset, t0());
        assert_eq!(r.events[0].end, None);
        assert_eq!(r.events[0].min_margin, 0.0);
        assert_eq!(r.samples_at_or_below_dew_point, 5);
    }

    #[test]
    fn dry_surface_has_no_events() {
        // RH chosen so Td sits well below Ts
        let r = detect_condensation_events(&grid(&[20.0; 6]), &grid(&[20.0; 6]), &grid(&[70.0; 6]), 0.2).unwrap();
        assert_eq!(r.count(), 0);
        assert_eq!(r.evaluated_samples, 6);
    }

    #[test]
    fn missing_cells_hold_state() {
        let m = vec![Some(-1.0), None, Some(0.1), None, Some(0.3), Some(-0.5)];
        let spans = condensation_spans(&m, 0.2);
        assert_eq!(spans, vec![(0, Some(4), -1.0), (5, None, -0.5)]);
    }

    #[test]
    fn misaligned_grids_rejected() {
        let a = grid(&[1.0, 2.0]);
        let b = GridSeries::from_values(t0() + Duration::minutes(20), Duration::minutes(20), &[1.0, 2.0]);
        assert!(matches!(detect_condensation_events(&a, &b, &a, 0.2), Err(Error::MisalignedInput)));
    }

    #[test]
    fn freeze_thaw_examples() {
        assert_eq!(count_freeze_thaw_cycles(&series(&[5.0, -2.0, 4.0]), 0.0, 0.5).unwrap().count, 1);
        assert_eq!(count_freeze_thaw_cycles(&series(&[5.0, 3.0, 8.0, 1.0]), 0.0, 0.5).unwrap().count, 0);
        let chatter = [0.4, -0.4, 0.3, -0.2, 0.45, -0.49, 0.1];
        assert_eq!(count_freeze_thaw_cycles(&series(&chatter), 0.0, 0.5).unwrap().count, 0);
        // starting frozen does not count until a warm spell has been seen
        assert_eq!(count_freeze_thaw_cycles(&series(&[-3.0, 4.0, -3.0, 4.0]), 0.0, 0.5).unwrap().count, 1);
        let c = count_freeze_thaw_cycles(&series(&[5.0, -2.0, 4.0]), 0.0, 0.5).unwrap();
        assert_eq!(c.cycles[0].start, t0() + Duration::hours(1));
        assert_eq!(c.cycles[0].end, t0() + Duration::hours(2));
        assert_eq!(c.parameters["hysteresis"], 0.5);
        assert!(count_freeze_thaw_cycles(&series(&[1.0]), 0.0, -0.1).is_err());
    }

    #[test]
    fn soaking_drying_examples() {
        let th = SoakingThresholds::new(Some(10.0), Some(5.0)).unwrap();
        assert_eq!(count_soaking_drying_cycles(&series(&[12.0, 4.0, 13.0]), &th).count, 1);
        assert_eq!(count_soaking_drying_cycles(&series(&[14.0, 12.0, 9.0, 6.0, 3.0, 1.0]), &th).count, 0);
        assert_eq!(count_soaking_drying_cycles(&series(&[12.0, 6.0, 11.0, 5.5, 12.0]), &th).count, 0);
    }

    #[test]
    fn soaking_thresholds_are_mandatory() {
        assert!(matches!(SoakingThresholds::new(None, Some(5.0)), Err(Error::Config(_))));
        assert!(matches!(SoakingThresholds::new(Some(5.0), None), Err(Error::Config(_))));
        assert!(matches!(SoakingThresholds::new(Some(5.0), Some(5.0)), Err(Error::Config(_))));
        assert!(matches!(SoakingThresholds::new(Some(4.0), Some(5.0)), Err(Error::Config(_))));
    }

    fn values() -> impl Strategy<Value = Vec<Option<f64>>> {
        proptest::collection::vec(proptest::option::weighted(0.9, -5.0f64..5.0), 0..200)
    }

    proptest! {
        #[test]
        fn dead_band_padding_does_not_change_counts(
            v in values(),
            pre in proptest::collection::vec(-0.49f64..0.49, 0..10),
            post in proptest::collection::vec(-0.49f64..0.49, 0..10),
        ) {
            let base = two_threshold_cycles(&v, 0.5, -0.5).len();
            let padded: Vec<Option<f64>> = pre.iter().map(|x| Some(*x))
                .chain(v.iter().copied())
                .chain(post.iter().map(|x| Some(*x)))
                .collect();
            prop_assert_eq!(two_threshold_cycles(&padded, 0.5, -0.5).len(), base);
        }

        #[test]
        fn clear_surface_padding_does_not_change_condensation(
            v in values(),
            pre in proptest::collection::vec(0.2f64..10.0, 0..10),
            post in proptest::collection::vec(0.2f64..10.0, 0..10),
        ) {
            let base = condensation_spans(&v, 0.2).len();
            let padded: Vec<Option<f64>> = pre.iter().map(|x| Some(*x))
                .chain(v.iter().copied())
                .chain(post.iter().map(|x| Some(*x)))
                .collect();
            prop_assert_eq!(condensation_spans(&padded, 0.2).len(), base);
        }

        #[test]
        fn events_are_well_formed(v in values()) {
            for (onset, end, min) in condensation_spans(&v, 0.2) {
                prop_assert!(min <= 0.0);
                if let Some(e) = end { prop_assert!(onset < e); }
            }
        }
    }
}
