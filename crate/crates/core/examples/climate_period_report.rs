//! Six months of synthetic monitoring: per-face summaries, event counts
//! per sensor and the south-west vs north-east comparison.

use chrono::NaiveDate;
use weathermatrix::fixtures::{strasbourg_sensors, synthetic_site, STRASBOURG_TZ};
use weathermatrix::ingest::Face;
use weathermatrix::pipeline::{compare_sensor_faces, face_summaries, sensor_climates, ClimateOptions, SeriesSet};
use weathermatrix::time::Period;

fn main() -> weathermatrix::Result<()> {
    let sensors = strasbourg_sensors();
    let first = NaiveDate::from_ymd_opt(2023, 10, 1).unwrap();
    let period = Period::local_days(first, NaiveDate::from_ymd_opt(2024, 3, 31).unwrap(), STRASBOURG_TZ)?;
    let days = (period.duration().num_hours() as f64 / 24.0).round() as u32;

    let mut series = SeriesSet::new();
    for (_, list) in synthetic_site(&sensors, period.start, days, 7) {
        for s in list {
            series.insert((s.sensor_id.clone(), s.quantity), s);
        }
    }

    println!("period {period}\n");
    println!("face   avg T / avg Ts / avg RH / T max / T min / RH max / RH min");
    for (face, summary) in face_summaries(&sensors, &series, &period) {
        println!("{face:>5}  {}", summary.table_row());
    }

    let mut opts = ClimateOptions::new(period, STRASBOURG_TZ);
    opts.soaking = Some(weathermatrix::events::SoakingThresholds::new(Some(6.0), Some(4.5))?);
    println!("\nsensor    cond  freeze-thaw  RH>90 days  soak/dry");
    for (_, c) in sensor_climates(&sensors, &series, &opts)? {
        let show = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
        let days = c.rh_days.map_or("-".to_string(), |d| format!("{}/{}", d.qualifying_days, d.evaluable_days));
        println!(
            "{:<8} {:>5} {:>12} {:>11} {:>9}",
            c.sensor_id,
            show(c.condensation_events),
            show(c.freeze_thaw_cycles),
            days,
            show(c.soaking_drying_cycles)
        );
    }

    let cmp = compare_sensor_faces(&sensors, &series, Face::Ne, Face::Sw, &period)?;
    println!(
        "\nSW - NE: {:+.2} °C, {:+.1} % RH over {} paired readings",
        cmp.delta_avg_t,
        cmp.delta_avg_rh.unwrap_or(f64::NAN),
        cmp.n_t
    );
    Ok(())
}
