//! Parse a field-logger export: semicolon separated, decimal commas,
//! local timestamps. Bad rows are reported, not fatal; gaps are annotated.

use chrono::Duration;
use weathermatrix::fixtures::{strasbourg_sensors, STRASBOURG_TZ};
use weathermatrix::ingest::{align_series, detect_gaps, parse_sensor_csv, ParseOptions, Quantity};

const LOG: &str = "\
timestamp;air_temp;rel_humidity
2024-03-30 22:00:00;4,1;88,0
2024-03-30 22:20:00;3,9;89,5
2024-03-30 22:40:00;3,6;91,2
2024-03-30 23:00:00;n/a;92,0
2024-03-30 23:20:00;3,2;250
2024-03-31 01:00:00;2,8;94,1
2024-03-31 01:20:00;2,7;94,8
2024-03-31 03:40:00;2,5;95,0
2024-03-31 04:00:00;2,6;94,2
";

fn main() -> weathermatrix::Result<()> {
    let sensors = strasbourg_sensors();
    let spec = sensors.get("TH-NE").expect("registered");
    let log = parse_sensor_csv(LOG, spec, &ParseOptions { timezone: STRASBOURG_TZ })?;

    for r in &log.rejected {
        println!("rejected line {}: {}", r.row, r.reason);
    }
    for s in log.series {
        let s = detect_gaps(s, spec.expected_interval(), 1.5);
        println!("\n{} {} ({} readings)", s.sensor_id, s.quantity.label(), s.len());
        for r in &s.readings {
            println!("  {}  {:>6.1} {}  {}", r.timestamp, r.value, s.quantity.unit(), r.quality.label());
        }
        for g in &s.gaps {
            println!("  gap {} .. {} ({} min)", g.start, g.end, g.duration().num_minutes());
        }
    }

    // clocks jump from 02:00 to 03:00 that night: 01:20 -> 03:40 is 80 min
    let log = parse_sensor_csv(LOG, spec, &ParseOptions { timezone: STRASBOURG_TZ })?;
    let frame = align_series(&log.series, Duration::minutes(20), Duration::minutes(5))?;
    let rh = frame.series("TH-NE", Quantity::RelHumidity).expect("aligned");
    println!("\naligned on a 20 min grid: {} cells, {} empty", rh.values.len(), rh.values.iter().filter(|v| v.is_none()).count());
    Ok(())
}
