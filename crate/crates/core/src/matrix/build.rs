use std::collections::BTreeMap;

use super::schema::{MatrixSchema, ION_COLUMNS, MATRIX_SCHEMA_VERSION};
use super::table::{AlterationMatrix, Cell, MatrixMeta};
use crate::assessment::{
    assess_salt_contamination, colorimetry_delta, Block, BlockRegistry, Campaign, Family, Lab, SaltThresholds,
    ValidatedCampaign,
};
use crate::events::ChannelStats;
use crate::index::{SubIndexSet, WeatheringIndex};
use crate::ingest::SensorRegistry;
use crate::pipeline::SensorClimate;
use crate::time::Period;
use crate::{Error, Result};

/// Block id → ids of the sensors associated with it.
pub fn sensor_block_map(sensors: &SensorRegistry) -> BTreeMap<String, Vec<String>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for s in &sensors.sensors {
        for b in &s.associated_block_ids {
            map.entry(b.clone()).or_default().push(s.sensor_id.clone());
        }
    }
    map
}

/// Everything a build reads. Indices and climate aggregates are computed
/// upstream so the build itself is a pure join.
pub struct MatrixInputs<'a> {
    pub registry: &'a BlockRegistry,
    pub campaign: &'a ValidatedCampaign,
    pub previous: Option<&'a Campaign>,
    pub indices: &'a [(SubIndexSet, WeatheringIndex)],
    pub climate: &'a BTreeMap<String, SensorClimate>,
    pub sensor_blocks: &'a BTreeMap<String, Vec<String>>,
    pub salt_thresholds: SaltThresholds,
    pub policy_hash: String,
    pub lookback: Option<Period>,
    pub parameters: BTreeMap<String, String>,
}

fn mean_lab(campaign: &Campaign, block_id: &str) -> Option<Lab> {
    Lab::mean(campaign.measurements_for(block_id).filter_map(|m| m.colorimetry.as_ref()))
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn structural_cells(block: &Block, out: &mut BTreeMap<String, Cell>) {
    out.insert("block_id".into(), Cell::text(&block.block_id));
    out.insert("face".into(), Cell::text(block.face.label()));
    out.insert("height_band_m".into(), Cell::Number(block.height_band_m));
    out.insert("material".into(), Cell::text(block.material.label()));
    out.insert("kind".into(), Cell::text(block.kind.label()));
    out.insert("configuration".into(), Cell::text(&block.configuration));
}

fn index_cells(subs: Option<&SubIndexSet>, idx: Option<&WeatheringIndex>, out: &mut BTreeMap<String, Cell>) {
    out.insert("i_structure".into(), Cell::number(subs.and_then(|s| s.i_structure)));
    for f in Family::ALL {
        out.insert(f.label().into(), Cell::number(subs.and_then(|s| s.family(f))));
    }
    out.insert("i_alteration".into(), Cell::number(idx.and_then(|w| w.i_alteration)));
    out.insert("i".into(), Cell::number(idx.map(|w| w.i)));
}

fn measurement_cells(inputs: &MatrixInputs<'_>, block_id: &str, out: &mut BTreeMap<String, Cell>) {
    let campaign: &Campaign = inputs.campaign;
    let lab = mean_lab(campaign, block_id);
    out.insert("color_l".into(), Cell::number(lab.map(|l| l.l)));
    out.insert("color_a".into(), Cell::number(lab.map(|l| l.a)));
    out.insert("color_b".into(), Cell::number(lab.map(|l| l.b)));
    let before = inputs.previous.and_then(|p| mean_lab(p, block_id));
    out.insert(
        "delta_e_prev".into(),
        Cell::number(colorimetry_delta(before.as_ref(), lab.as_ref()).ok()),
    );
    let humidity: Vec<f64> = campaign.measurements_for(block_id).filter_map(|m| m.surface_humidity).collect();
    out.insert(
        "surface_humidity".into(),
        Cell::number(ChannelStats::from_values(humidity).map(|s| s.mean)),
    );
}

fn lab_cells(inputs: &MatrixInputs<'_>, block_id: &str, out: &mut BTreeMap<String, Cell>) {
    let salts: Vec<_> = inputs.campaign.salts_for(block_id).collect();
    let field = |name: &str| {
        max_of(salts.iter().flat_map(|s| s.percent_fields()).filter(|(f, _)| *f == name).map(|(_, v)| v))
    };
    for ion in ION_COLUMNS {
        out.insert(format!("{ion}_pct"), Cell::number(field(ion)));
    }
    out.insert("w_pct".into(), Cell::number(field("w")));
    out.insert("w_h_pct".into(), Cell::number(field("w_h")));
    let flags: Vec<_> = salts
        .iter()
        .map(|s| assess_salt_contamination(s, &inputs.salt_thresholds))
        .collect();
    let any = |pick: &dyn Fn(&crate::assessment::ContaminationFlags) -> bool| {
        (!flags.is_empty()).then(|| flags.iter().any(pick))
    };
    out.insert("chloride_flag".into(), Cell::flag(any(&|f| f.chloride.contaminated())));
    out.insert("nitrate_flag".into(), Cell::flag(any(&|f| f.nitrate.contaminated())));
    out.insert("sulfate_flag".into(), Cell::flag(any(&|f| f.sulfate.contaminated())));
    out.insert("hygroscopic_salt_suspected".into(), Cell::flag(any(&|f| f.hygroscopic_salt_suspected)));
}

/// Sensor aggregates for one block: mean of the sensors' averages, extreme
/// of their extremes, sum of event counts. Day counts take the largest
/// sensor value, since two sensors see the same calendar days.
fn climate_cells(sensors: &[&SensorClimate], out: &mut BTreeMap<String, Cell>) {
    type Pick = fn(&SensorClimate) -> Option<ChannelStats>;
    let channels: [(&str, Pick); 3] = [
        ("t", |c| c.air_temp),
        ("ts", |c| c.surface_temp),
        ("rh", |c| c.rel_humidity),
    ];
    for (q, pick) in channels {
        let stats: Vec<ChannelStats> = sensors.iter().filter_map(|c| pick(c)).collect();
        let avg = (!stats.is_empty()).then(|| stats.iter().map(|s| s.mean).sum::<f64>() / stats.len() as f64);
        out.insert(format!("avg_{q}"), Cell::number(avg));
        out.insert(format!("min_{q}"), Cell::number(stats.iter().map(|s| s.min).reduce(f64::min)));
        out.insert(format!("max_{q}"), Cell::number(stats.iter().map(|s| s.max).reduce(f64::max)));
    }
    let sum = |pick: fn(&SensorClimate) -> Option<usize>| {
        sensors.iter().filter_map(|c| pick(c)).reduce(|a, b| a + b)
    };
    let max = |pick: fn(&SensorClimate) -> Option<usize>| sensors.iter().filter_map(|c| pick(c)).max();
    out.insert("condensation_events".into(), Cell::count(sum(|c| c.condensation_events)));
    out.insert("condensation_samples".into(), Cell::count(sum(|c| c.condensation_samples)));
    out.insert("freeze_thaw_cycles".into(), Cell::count(sum(|c| c.freeze_thaw_cycles)));
    out.insert("soaking_drying_cycles".into(), Cell::count(sum(|c| c.soaking_drying_cycles)));
    out.insert("rh90_days".into(), Cell::count(max(|c| c.rh_days.map(|d| d.qualifying_days))));
    out.insert("rh_evaluable_days".into(), Cell::count(max(|c| c.rh_days.map(|d| d.evaluable_days))));
}

/// Joins registry, campaign, indices and climate into one row per
/// registered block. Columns the builder does not know stay missing;
/// campaign data the schema has no column for is an error.
pub fn build_matrix(inputs: &MatrixInputs<'_>, schema: &MatrixSchema) -> Result<AlterationMatrix> {
    schema.validate()?;
    let campaign: &Campaign = inputs.campaign;
    if campaign.site_id != inputs.registry.site_id {
        return Err(Error::SiteMismatch(campaign.site_id.clone(), inputs.registry.site_id.clone()));
    }
    let indices: BTreeMap<&str, &(SubIndexSet, WeatheringIndex)> =
        inputs.indices.iter().map(|p| (p.0.block_id.as_str(), p)).collect();
    if let Some((subs, _)) = inputs.indices.iter().find(|(s, _)| s.campaign_id != campaign.campaign_id) {
        return Err(Error::InvalidParameter(format!(
            "index for {} comes from campaign {}, not {}",
            subs.block_id, subs.campaign_id, campaign.campaign_id
        )));
    }

    let mut rows = BTreeMap::new();
    for block in &inputs.registry.blocks {
        let mut full = BTreeMap::new();
        structural_cells(block, &mut full);
        let pair = indices.get(block.block_id.as_str());
        index_cells(pair.map(|p| &p.0), pair.map(|p| &p.1), &mut full);
        measurement_cells(inputs, &block.block_id, &mut full);
        lab_cells(inputs, &block.block_id, &mut full);
        let sensors: Vec<&SensorClimate> = inputs
            .sensor_blocks
            .get(&block.block_id)
            .into_iter()
            .flatten()
            .filter_map(|id| inputs.climate.get(id))
            .collect();
        climate_cells(&sensors, &mut full);

        let mut cells = Vec::with_capacity(schema.len());
        for c in &schema.columns {
            cells.push(full.remove(&c.name).unwrap_or(Cell::Missing));
        }
        let default = MatrixSchema::default();
        if let Some((name, _)) = full.iter().find(|(name, cell)| {
            !cell.is_missing()
                && default
                    .columns
                    .iter()
                    .any(|c| &c.name == *name && c.kind.from_campaign())
        }) {
            return Err(Error::SchemaMismatch(format!(
                "campaign {} has {name} data for {} but the schema has no such column",
                campaign.campaign_id, block.block_id
            )));
        }
        rows.insert(block.block_id.clone(), cells);
    }

    let matrix = AlterationMatrix {
        meta: MatrixMeta {
            site_id: campaign.site_id.clone(),
            campaign_id: campaign.campaign_id.clone(),
            as_of: campaign.date,
            policy_hash: inputs.policy_hash.clone(),
            lookback: inputs.lookback,
            parameters: inputs.parameters.clone(),
        },
        schema: MatrixSchema {
            version: schema.version.max(MATRIX_SCHEMA_VERSION),
            ..schema.clone()
        },
        rows,
    };
    matrix.validate()?;
    Ok(matrix)
}
