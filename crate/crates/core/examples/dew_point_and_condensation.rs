//! Dew point from air temperature and humidity, then condensation events
//! on a stone surface that cools below it overnight.

use chrono::{Duration, TimeZone, Utc};
use weathermatrix::events::{detect_condensation_events, dew_point};
use weathermatrix::ingest::GridSeries;

fn main() -> weathermatrix::Result<()> {
    println!("  T °C  RH %   Td °C");
    for (t, rh) in [(20.0, 50.0), (10.0, 80.0), (5.0, 95.0), (0.0, 100.0), (-5.0, 70.0)] {
        println!("{t:>6.1} {rh:>5.0} {:>7.2}", dew_point(t, rh)?);
    }

    // two nights: the surface drops below the dew point around dawn
    let start = Utc.with_ymd_and_hms(2024, 10, 3, 0, 0, 0).unwrap();
    let n = 2 * 72;
    let hour = |i: usize| (i % 72) as f64 / 3.0;
    let air: Vec<f64> = (0..n).map(|i| 9.0 + 4.0 * ((hour(i) - 15.0) / 24.0 * std::f64::consts::TAU).cos()).collect();
    let rh: Vec<f64> = air.iter().map(|t| (100.0 - 2.5 * (t - 5.0)).min(100.0)).collect();
    let surface: Vec<f64> = (0..n)
        .map(|i| air[i] - if (3.0..8.0).contains(&hour(i)) { 3.0 } else { 0.5 })
        .collect();

    let grid = |v: &[f64]| GridSeries::from_values(start, Duration::minutes(20), v);
    let report = detect_condensation_events(&grid(&surface), &grid(&air), &grid(&rh), 0.2)?;
    println!("\n{} condensation event(s), {} of {} samples at or below Td", report.count(), report.samples_at_or_below_dew_point, report.evaluated_samples);
    for e in &report.events {
        let end = e.end.map_or("still wet".to_string(), |t| t.format("%d %H:%M").to_string());
        println!("  {} -> {}  min margin {:+.2} °C", e.onset.format("%d %H:%M"), end, e.min_margin);
    }
    Ok(())
}
