//! Join the campaign indices and a lookback window of sensor climate into
//! one row per block, then export it as CSV.

use std::collections::BTreeMap;

use chrono::Duration;
use weathermatrix::assessment::{SaltThresholds, ValidatedCampaign};
use weathermatrix::fixtures::{initial_campaign, strasbourg_blocks, strasbourg_sensors, synthetic_site, STRASBOURG_TZ};
use weathermatrix::index::{campaign_indices, IndexPolicy};
use weathermatrix::matrix::{build_matrix, export_csv, sensor_block_map, MatrixInputs, MatrixSchema};
use weathermatrix::pipeline::{sensor_climates, ClimateOptions, SeriesSet};
use weathermatrix::time::{local_midnight, Period};

fn main() -> weathermatrix::Result<()> {
    let blocks = strasbourg_blocks();
    let sensors = strasbourg_sensors();
    let campaign = ValidatedCampaign::new(initial_campaign(&blocks, 1), &blocks)?;
    let policy = IndexPolicy::default();
    let indices = campaign_indices(&blocks, &campaign, &policy, None)?;

    let end = local_midnight(campaign.date, STRASBOURG_TZ)?;
    let window = Period::new(end - Duration::days(90), end)?;
    let mut series = SeriesSet::new();
    for (_, list) in synthetic_site(&sensors, window.start, 90, 1) {
        for s in list {
            series.insert((s.sensor_id.clone(), s.quantity), s);
        }
    }
    let climate = sensor_climates(&sensors, &series, &ClimateOptions::new(window, STRASBOURG_TZ))?;

    let sensor_blocks = sensor_block_map(&sensors);
    let m = build_matrix(
        &MatrixInputs {
            registry: &blocks,
            campaign: &campaign,
            previous: None,
            indices: &indices,
            climate: &climate,
            sensor_blocks: &sensor_blocks,
            salt_thresholds: SaltThresholds::default(),
            policy_hash: policy.hash(),
            lookback: Some(window),
            parameters: BTreeMap::new(),
        },
        &MatrixSchema::default(),
    )?;

    println!("{} rows x {} columns, content {}", m.n_rows(), m.n_columns(), &m.content_hash()[..16]);
    let csv = export_csv(&m);
    for line in csv.lines().take(4) {
        println!("{}", if line.len() > 120 { &line[..120] } else { line });
    }
    println!("...");
    for id in ["SW-01", "SW-18", "NE-30"] {
        let show = |c: &str| m.get(id, c).and_then(|v| v.as_f64()).map_or("-".into(), |v| format!("{v:.2}"));
        println!(
            "{id}: i = {}, avg_rh = {}, rh90_days = {}, condensation_events = {}",
            show("i"),
            show("avg_rh"),
            show("rh90_days"),
            show("condensation_events")
        );
    }
    Ok(())
}
