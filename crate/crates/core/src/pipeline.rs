//! Glue between raw logs and the matrix: parsing many files at once,
//! merging stored series, and per-sensor climate aggregates over a window.

use std::collections::BTreeMap;

use chrono::Duration;
use chrono_tz::Tz;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::events::{
    compare_faces, condensation_rows, count_freeze_thaw_cycles, count_soaking_drying_cycles, count_threshold_days,
    cycle_rows, detect_condensation_events_with, period_summary, ChannelStats, CondensationReport, CycleCount,
    DayCount, Direction, EventRow, FaceClimate, FaceComparison, MagnusCoefficients, PeriodSummary, SoakingThresholds,
    DEFAULT_CONDENSATION_HYSTERESIS, DEFAULT_FREEZE_HYSTERESIS, DEFAULT_FREEZE_THRESHOLD,
};
use crate::ingest::{
    align_series_with, detect_gaps, parse_sensor_csv, AlignOptions, Face, ParseOptions, Quantity, RejectedRow,
    SensorKind, SensorRegistry, SensorSpec, TimeSeries, DEFAULT_GAP_FACTOR,
};
use crate::time::Period;
use crate::{Error, Result};

/// Stored series keyed by sensor id and channel.
pub type SeriesSet = BTreeMap<(String, Quantity), TimeSeries>;

/// Outcome of parsing one log file.
#[derive(Debug)]
pub struct IngestedFile {
    pub name: String,
    pub sensor_id: Option<String>,
    pub result: Result<(Vec<TimeSeries>, Vec<RejectedRow>)>,
}

/// Parses log files in parallel. The sensor is found from the file stem
/// (`<sensor_id>` or `<sensor_id>_<anything>`). Gaps are annotated.
pub fn ingest_files(registry: &SensorRegistry, files: &[(String, String)], timezone: Tz) -> Vec<IngestedFile> {
    let opts = ParseOptions { timezone };
    files
        .par_iter()
        .map(|(name, raw)| {
            let stem = std::path::Path::new(name)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(name);
            let Some(spec) = registry.match_file_stem(stem) else {
                return IngestedFile {
                    name: name.clone(),
                    sensor_id: None,
                    result: Err(Error::InvalidSpec(format!("no registered sensor matches file {name}"))),
                };
            };
            let result = parse_sensor_csv(raw, spec, &opts).map(|log| {
                let series = log
                    .series
                    .into_iter()
                    .map(|s| detect_gaps(s, spec.expected_interval(), DEFAULT_GAP_FACTOR))
                    .collect();
                (series, log.rejected)
            });
            IngestedFile {
                name: name.clone(),
                sensor_id: Some(spec.sensor_id.clone()),
                result,
            }
        })
        .collect()
}

/// Union of two series of one channel. On equal timestamps the reading from
/// `newer` wins.
pub fn merge_series(older: &TimeSeries, newer: &TimeSeries, expected_interval: Duration) -> TimeSeries {
    let mut by_time: BTreeMap<_, _> = older.readings.iter().map(|r| (r.timestamp, *r)).collect();
    for r in &newer.readings {
        by_time.insert(r.timestamp, *r);
    }
    let merged = TimeSeries {
        readings: by_time.into_values().collect(),
        gaps: Vec::new(),
        ..newer.clone()
    };
    detect_gaps(merged, expected_interval, DEFAULT_GAP_FACTOR)
}

/// Event-counting parameters. Soaking/drying thresholds have no default;
/// without them the cycles are not counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimateOptions {
    pub period: Period,
    pub timezone: Tz,
    pub freeze_threshold: f64,
    pub freeze_hysteresis: f64,
    pub condensation_hysteresis: f64,
    pub magnus: MagnusCoefficients,
    pub rh_day_threshold: f64,
    pub min_samples_per_day: usize,
    pub soaking: Option<SoakingThresholds>,
}

impl ClimateOptions {
    pub fn new(period: Period, timezone: Tz) -> Self {
        ClimateOptions {
            period,
            timezone,
            freeze_threshold: DEFAULT_FREEZE_THRESHOLD,
            freeze_hysteresis: DEFAULT_FREEZE_HYSTERESIS,
            condensation_hysteresis: DEFAULT_CONDENSATION_HYSTERESIS,
            magnus: MagnusCoefficients::default(),
            rh_day_threshold: 90.0,
            min_samples_per_day: 1,
            soaking: None,
        }
    }
}

/// Climate aggregates of one sensor over the window. `None` means the
/// sensor has no data for that quantity, never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorClimate {
    pub sensor_id: String,
    pub face: Face,
    pub air_temp: Option<ChannelStats>,
    pub surface_temp: Option<ChannelStats>,
    pub rel_humidity: Option<ChannelStats>,
    pub condensation_events: Option<usize>,
    pub condensation_samples: Option<usize>,
    pub freeze_thaw_cycles: Option<usize>,
    pub rh_days: Option<DayCount>,
    pub soaking_drying_cycles: Option<usize>,
    pub water_content: Option<ChannelStats>,
    pub crack_width: Option<ChannelStats>,
}

/// Everything the events report needs for one sensor.
#[derive(Debug, Clone)]
pub struct SensorEvents {
    pub climate: SensorClimate,
    pub condensation: Option<CondensationReport>,
    pub freeze_thaw: Option<CycleCount>,
    pub soaking_drying: Option<CycleCount>,
}

impl SensorEvents {
    pub fn rows(&self) -> Vec<EventRow> {
        let id = &self.climate.sensor_id;
        let mut rows = Vec::new();
        if let Some(c) = &self.condensation {
            rows.extend(condensation_rows(id, c));
        }
        for c in [&self.freeze_thaw, &self.soaking_drying].into_iter().flatten() {
            rows.extend(cycle_rows(id, c));
        }
        rows
    }
}

fn windowed(series: &SeriesSet, id: &str, q: Quantity, period: &Period) -> Option<TimeSeries> {
    series
        .get(&(id.to_string(), q))
        .map(|s| s.within(period))
        .filter(|s| s.ok_readings().next().is_some())
}

fn stats(s: Option<&TimeSeries>) -> Option<ChannelStats> {
    ChannelStats::from_values(s?.ok_readings().map(|r| r.value))
}

/// The thermo-hygrometer a surface probe is paired with for dew point:
/// the first one on the same face with data.
fn partner<'a>(registry: &'a SensorRegistry, probe: &SensorSpec, series: &SeriesSet) -> Option<&'a SensorSpec> {
    registry.sensors.iter().find(|s| {
        s.kind == SensorKind::ThermoHygrometer
            && s.face == probe.face
            && series.contains_key(&(s.sensor_id.clone(), Quantity::AirTemp))
            && series.contains_key(&(s.sensor_id.clone(), Quantity::RelHumidity))
    })
}

fn condensation_for(
    registry: &SensorRegistry,
    probe: &SensorSpec,
    ts: &TimeSeries,
    series: &SeriesSet,
    opts: &ClimateOptions,
) -> Result<Option<CondensationReport>> {
    let Some(th) = partner(registry, probe, series) else {
        return Ok(None);
    };
    let (Some(t), Some(rh)) = (
        windowed(series, &th.sensor_id, Quantity::AirTemp, &opts.period),
        windowed(series, &th.sensor_id, Quantity::RelHumidity, &opts.period),
    ) else {
        return Ok(None);
    };
    let interval = probe.expected_interval();
    let mut align = AlignOptions::new(interval, interval / 4);
    align.origin = Some(opts.period.start);
    let frame = align_series_with(&[ts.clone(), t, rh], &align)?;
    let get = |id: &str, q| frame.series(id, q).ok_or(Error::MisalignedInput);
    let report = detect_condensation_events_with(
        &get(&probe.sensor_id, Quantity::SurfaceTemp)?,
        &get(&th.sensor_id, Quantity::AirTemp)?,
        &get(&th.sensor_id, Quantity::RelHumidity)?,
        opts.condensation_hysteresis,
        opts.magnus,
    )?;
    Ok(Some(report))
}

fn sensor_events(
    registry: &SensorRegistry,
    spec: &SensorSpec,
    series: &SeriesSet,
    opts: &ClimateOptions,
) -> Result<SensorEvents> {
    let id = spec.sensor_id.as_str();
    let get = |q| windowed(series, id, q, &opts.period);
    let (t, ts, rh) = (get(Quantity::AirTemp), get(Quantity::SurfaceTemp), get(Quantity::RelHumidity));
    let (wc, crack) = (get(Quantity::WaterContent), get(Quantity::CrackWidth));

    let freeze_thaw = t
        .as_ref()
        .map(|t| count_freeze_thaw_cycles(t, opts.freeze_threshold, opts.freeze_hysteresis))
        .transpose()?;
    let condensation = match &ts {
        Some(ts) => condensation_for(registry, spec, ts, series, opts)?,
        None => None,
    };
    let rh_days = rh
        .as_ref()
        .map(|rh| {
            count_threshold_days(
                rh,
                opts.rh_day_threshold,
                Direction::Above,
                opts.min_samples_per_day,
                opts.timezone,
            )
        })
        .transpose()?;
    let soaking_drying = match (&wc, &opts.soaking) {
        (Some(wc), Some(th)) => Some(count_soaking_drying_cycles(wc, th)),
        _ => None,
    };
    let climate = SensorClimate {
        sensor_id: id.to_string(),
        face: spec.face,
        air_temp: stats(t.as_ref()),
        surface_temp: stats(ts.as_ref()),
        rel_humidity: stats(rh.as_ref()),
        condensation_events: condensation.as_ref().map(CondensationReport::count),
        condensation_samples: condensation.as_ref().map(|c| c.samples_at_or_below_dew_point),
        freeze_thaw_cycles: freeze_thaw.as_ref().map(|c| c.count),
        rh_days,
        soaking_drying_cycles: soaking_drying.as_ref().map(|c| c.count),
        water_content: stats(wc.as_ref()),
        crack_width: stats(crack.as_ref()),
    };
    Ok(SensorEvents {
        climate,
        condensation,
        freeze_thaw,
        soaking_drying,
    })
}

/// Events and aggregates for every registered sensor, in registry order.
pub fn sensor_events_all(registry: &SensorRegistry, series: &SeriesSet, opts: &ClimateOptions) -> Result<Vec<SensorEvents>> {
    registry
        .sensors
        .par_iter()
        .map(|s| sensor_events(registry, s, series, opts))
        .collect()
}

/// Per-sensor climate aggregates keyed by sensor id.
pub fn sensor_climates(
    registry: &SensorRegistry,
    series: &SeriesSet,
    opts: &ClimateOptions,
) -> Result<BTreeMap<String, SensorClimate>> {
    Ok(sensor_events_all(registry, series, opts)?
        .into_iter()
        .map(|e| (e.climate.sensor_id.clone(), e.climate))
        .collect())
}

/// Period summary per face from its thermo-hygrometer and surface probe.
pub fn face_summaries(registry: &SensorRegistry, series: &SeriesSet, period: &Period) -> BTreeMap<Face, PeriodSummary> {
    let first_of = |face: Face, kind: SensorKind, q: Quantity| {
        registry
            .sensors
            .iter()
            .filter(|s| s.face == face && s.kind == kind)
            .find_map(|s| series.get(&(s.sensor_id.clone(), q)))
    };
    [Face::Ne, Face::Sw, Face::Other]
        .into_iter()
        .filter_map(|face| {
            let t = first_of(face, SensorKind::ThermoHygrometer, Quantity::AirTemp);
            let rh = first_of(face, SensorKind::ThermoHygrometer, Quantity::RelHumidity);
            let ts = first_of(face, SensorKind::SurfaceProbe, Quantity::SurfaceTemp);
            period_summary(t, ts, rh, *period).ok().map(|s| (face, s))
        })
        .collect()
}

/// Face comparison between the first thermo-hygrometers of two faces.
pub fn compare_sensor_faces(
    registry: &SensorRegistry,
    series: &SeriesSet,
    a: Face,
    b: Face,
    period: &Period,
) -> Result<FaceComparison> {
    let pick = |face: Face| -> Result<(TimeSeries, Option<TimeSeries>)> {
        let th = registry
            .sensors
            .iter()
            .find(|s| s.face == face && s.kind == SensorKind::ThermoHygrometer)
            .ok_or_else(|| Error::NoData(format!("no thermo-hygrometer on face {face}")))?;
        let t = windowed(series, &th.sensor_id, Quantity::AirTemp, period)
            .ok_or_else(|| Error::NoData(format!("no air temperature on face {face}")))?;
        Ok((t, windowed(series, &th.sensor_id, Quantity::RelHumidity, period)))
    };
    let (ta, rha) = pick(a)?;
    let (tb, rhb) = pick(b)?;
    compare_faces(
        &FaceClimate {
            face: a,
            air_temp: &ta,
            rel_humidity: rha.as_ref(),
        },
        &FaceClimate {
            face: b,
            air_temp: &tb,
            rel_humidity: rhb.as_ref(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{logger_csv, strasbourg_sensors, synthetic_site, STRASBOURG_TZ};
    use chrono::{TimeZone, Utc};

    fn site(days: u32) -> (SensorRegistry, SeriesSet, Period) {
        let reg = strasbourg_sensors();
        let start = Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap();
        let mut set = SeriesSet::new();
        for (spec, series) in synthetic_site(&reg, start, days, 42) {
            for s in series {
                set.insert((spec.sensor_id.clone(), s.quantity), s);
            }
        }
        (reg, set, Period::new(start, start + Duration::days(days as i64)).unwrap())
    }

    #[test]
    fn ingest_matches_stems_and_reports_failures() {
        let reg = strasbourg_sensors();
        let start = Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap();
        let site = synthetic_site(&reg, start, 2, 1);
        let mut files: Vec<(String, String)> = site
            .iter()
            .map(|(spec, s)| (format!("{}_2024-05.csv", spec.sensor_id), logger_csv(s, STRASBOURG_TZ)))
            .collect();
        files.push(("unknown.csv".into(), "timestamp,air_temp\n".into()));
        let out = ingest_files(&reg, &files, STRASBOURG_TZ);
        assert_eq!(out.iter().filter(|f| f.result.is_ok()).count(), 8);
        let bad = out.iter().find(|f| f.name == "unknown.csv").unwrap();
        assert!(bad.sensor_id.is_none() && bad.result.is_err());
    }

    #[test]
    fn merge_prefers_newer() {
        let t0 = Utc.with_ymd_and_hms(2024, 5, 17, 0, 0, 0).unwrap();
        let at = |m| t0 + Duration::minutes(m);
        let a = TimeSeries::from_points("TH-NE", Quantity::AirTemp, [(at(0), 1.0), (at(20), 2.0)]);
        let b = TimeSeries::from_points("TH-NE", Quantity::AirTemp, [(at(20), 9.0), (at(80), 3.0)]);
        let m = merge_series(&a, &b, Duration::minutes(20));
        assert_eq!(m.readings.iter().map(|r| r.value).collect::<Vec<_>>(), vec![1.0, 9.0, 3.0]);
        assert_eq!(m.gaps.len(), 1);
    }

    #[test]
    fn synthetic_fortnight() {
        let (reg, set, period) = site(14);
        let opts = ClimateOptions::new(period, STRASBOURG_TZ);
        let climates = sensor_climates(&reg, &set, &opts).unwrap();
        assert_eq!(climates.len(), 8);
        let th = &climates["TH-SW"];
        assert!(th.air_temp.is_some() && th.rh_days.is_some());
        assert!(th.condensation_events.is_none() && th.surface_temp.is_none());
        let st = &climates["ST-SW"];
        assert!(st.condensation_events.is_some());
        assert!(climates["TDR1-SW"].soaking_drying_cycles.is_none());
        assert!(climates["FISS-01"].crack_width.is_some());

        let cmp = compare_sensor_faces(&reg, &set, Face::Ne, Face::Sw, &period).unwrap();
        assert!((cmp.delta_avg_t - 1.0).abs() < 0.05, "{}", cmp.delta_avg_t);
        assert_eq!(face_summaries(&reg, &set, &period).len(), 2);

        let mut opts = ClimateOptions::new(period, STRASBOURG_TZ);
        opts.soaking = Some(SoakingThresholds::new(Some(6.0), Some(4.0)).unwrap());
        let events = sensor_events_all(&reg, &set, &opts).unwrap();
        assert!(events.iter().any(|e| e.soaking_drying.is_some()));
    }

    #[test]
    fn window_outside_data_is_missing_not_zero() {
        let (reg, set, period) = site(2);
        let later = Period::new(period.end + Duration::days(10), period.end + Duration::days(11)).unwrap();
        let climates = sensor_climates(&reg, &set, &ClimateOptions::new(later, STRASBOURG_TZ)).unwrap();
        assert!(climates.values().all(|c| c.air_temp.is_none() && c.freeze_thaw_cycles.is_none()));
    }
}
