//! Does the crack open when the air is humid? Correlate fissurometer
//! readings with humidity at a range of lags.

use chrono::{Duration, TimeZone, Utc};
use weathermatrix::events::{crack_climate_correlation, strongest_lag};
use weathermatrix::ingest::GridSeries;

fn main() -> weathermatrix::Result<()> {
    let start = Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap();
    let hours: usize = 24 * 30;
    let rh: Vec<f64> = (0..hours)
        .map(|h| 75.0 + 15.0 * (h as f64 / 24.0 * std::f64::consts::TAU).sin() + 5.0 * (h as f64 / 97.0).cos())
        .collect();
    // the crack follows humidity about six hours later, plus seasonal drift
    let crack: Vec<f64> = (0..hours)
        .map(|h| 0.42 + 0.002 * rh[h.saturating_sub(6)] + 0.00002 * h as f64)
        .collect();

    let grid = |v: &[f64]| GridSeries::from_values(start, Duration::hours(1), v);
    let lags = crack_climate_correlation(&grid(&crack), &grid(&rh), Duration::hours(12), Duration::hours(2))?;
    for l in &lags {
        let r = l.r.unwrap_or(f64::NAN);
        println!("{:>+5} h  r = {r:+.3}  {}", l.lag_minutes / 60, "#".repeat((r.abs() * 40.0) as usize));
    }
    if let Some(best) = strongest_lag(&lags) {
        println!("\nstrongest at {:+} h (r = {:.3}, n = {})", best.lag_minutes / 60, best.r.unwrap(), best.n);
    }
    Ok(())
}
