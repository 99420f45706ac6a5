//! Two campaigns six months apart: record both matrices in a version
//! manifest and see which blocks moved.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use weathermatrix::assessment::{Campaign, SaltThresholds, ValidatedCampaign};
use weathermatrix::fixtures::{follow_up_campaign, initial_campaign, strasbourg_blocks, strasbourg_sensors};
use weathermatrix::index::{campaign_indices, IndexPolicy};
use weathermatrix::matrix::{build_matrix, diff_matrices, sensor_block_map, AlterationMatrix, MatrixInputs, MatrixSchema, VersionManifest};

fn matrix(c: &Campaign, previous: Option<&Campaign>) -> weathermatrix::Result<AlterationMatrix> {
    let blocks = strasbourg_blocks();
    let sensors = strasbourg_sensors();
    let campaign = ValidatedCampaign::new(c.clone(), &blocks)?;
    let policy = IndexPolicy::default();
    build_matrix(
        &MatrixInputs {
            registry: &blocks,
            campaign: &campaign,
            previous,
            indices: &campaign_indices(&blocks, &campaign, &policy, previous)?,
            climate: &BTreeMap::new(),
            sensor_blocks: &sensor_block_map(&sensors),
            salt_thresholds: SaltThresholds::default(),
            policy_hash: policy.hash(),
            lookback: None,
            parameters: BTreeMap::new(),
        },
        &MatrixSchema::default(),
    )
}

fn main() -> weathermatrix::Result<()> {
    let first = initial_campaign(&strasbourg_blocks(), 1);
    let second = follow_up_campaign(&first, NaiveDate::from_ymd_opt(2024, 10, 15).unwrap(), 2);
    let a = matrix(&first, None)?;
    let b = matrix(&second, Some(&first))?;

    let mut manifest = VersionManifest::new(a.meta.site_id.clone());
    for m in [&a, &b] {
        manifest.record(m, format!("matrices/{}.json", m.meta.campaign_id))?;
    }
    // recording the same matrix again changes nothing
    assert!(!manifest.record(&b, format!("matrices/{}.json", b.meta.campaign_id))?);
    for v in &manifest.versions {
        println!("{}  {}  {}", v.campaign_id, v.as_of, &v.content_hash[..16]);
    }

    let d = diff_matrices(&a, &b)?;
    println!();
    for line in d.table().lines().take(12) {
        println!("{line}");
    }
    let moved = d.nonzero_delta_i();
    println!("... {} of {} blocks changed", moved.len(), d.blocks.len());
    if let Some((id, delta)) = moved.iter().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())) {
        println!("largest change: {id} {delta:+.3}");
    }
    Ok(())
}
