use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{AveragingMode, IndexPolicy};
use super::scale::{rating_from_coverage, RatingScale};
use super::structural::structural_index;
use crate::assessment::{
    assess_salt_contamination, colorimetry_delta, AlterationRecord, Block, BlockRegistry, Campaign, Family, Lab,
    ValidatedCampaign,
};
use crate::{Error, Result};

/// Cap-and-sum: pattern coverages of one family on one block are added and
/// capped at 100 % before rating. `None` when the family was not surveyed,
/// `Some(0.0)` when it was surveyed and nothing was recorded.
pub fn family_subindex(records: &[&AlterationRecord], surveyed: bool, scale: &RatingScale) -> Result<Option<f64>> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.block_id != first.block_id || r.family != first.family) {
            return Err(Error::InvalidParameter(
                "family sub-index records must share block and family".into(),
            ));
        }
    }
    if !surveyed {
        return Ok(None);
    }
    let mut coverage = 0.0;
    for r in records {
        if !(0.0..=100.0).contains(&r.coverage_pct) {
            return Err(Error::Domain(format!("coverage {} % outside [0, 100]", r.coverage_pct)));
        }
        coverage += r.coverage_pct;
    }
    rating_from_coverage(coverage.min(100.0), scale).map(|r| Some(f64::from(r)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubIndexSet {
    pub block_id: String,
    pub campaign_id: String,
    /// Indexed by [`Family::index`].
    pub families: [Option<f64>; 5],
    pub i_structure: Option<f64>,
    /// Extra 0–5 components from the measurement extension.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub measurements: BTreeMap<String, f64>,
}

impl SubIndexSet {
    pub fn new(block_id: impl Into<String>, campaign_id: impl Into<String>) -> Self {
        SubIndexSet {
            block_id: block_id.into(),
            campaign_id: campaign_id.into(),
            families: [None; 5],
            i_structure: None,
            measurements: BTreeMap::new(),
        }
    }

    pub fn family(&self, f: Family) -> Option<f64> {
        self.families[f.index()]
    }

    pub fn set_family(&mut self, f: Family, value: Option<f64>) {
        self.families[f.index()] = value;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub value: f64,
    pub weight: f64,
}

/// The general index `i` with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatheringIndex {
    pub block_id: String,
    pub campaign_id: String,
    /// Mean of the assessed family ratings; `None` when no family was.
    pub i_alteration: Option<f64>,
    pub i: f64,
    pub components: Vec<Component>,
    /// Components left out because they were missing.
    pub excluded: Vec<String>,
    pub policy_hash: String,
}

fn weighted_mean(parts: &[Component]) -> f64 {
    let (num, den) = parts
        .iter()
        .fold((0.0, 0.0), |(n, d), c| (n + c.value * c.weight, d + c.weight));
    // all components equal: return it exactly
    if parts.iter().all(|c| c.value == parts[0].value) {
        return parts[0].value;
    }
    (num / den).clamp(0.0, 5.0)
}

pub fn weathering_index(subs: &SubIndexSet, policy: &IndexPolicy) -> Result<WeatheringIndex> {
    let check = |name: &str, v: f64| {
        if (0.0..=5.0).contains(&v) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{}: {name} = {v} outside [0, 5]", subs.block_id)))
        }
    };
    let w = &policy.weights;
    let mut excluded = Vec::new();
    let mut families = Vec::new();
    for f in Family::ALL {
        match subs.family(f) {
            Some(v) => {
                check(f.label(), v)?;
                families.push(Component {
                    name: f.label().to_string(),
                    value: v,
                    weight: w.family(f),
                });
            }
            None => excluded.push(f.label().to_string()),
        }
    }
    let i_alteration = (!families.is_empty()).then(|| weighted_mean(&families));

    let mut components = Vec::new();
    match subs.i_structure {
        Some(v) => {
            check("i_structure", v)?;
            components.push(Component {
                name: "i_structure".into(),
                value: v,
                weight: w.structure,
            });
        }
        None => excluded.push("i_structure".into()),
    }
    match policy.mode {
        AveragingMode::PooledSubIndices => components.extend(families),
        AveragingMode::StructureWithAlteration => {
            if let Some(v) = i_alteration {
                let weight = families.iter().map(|c| c.weight).sum::<f64>() / families.len() as f64;
                components.push(Component {
                    name: "i_alteration".into(),
                    value: v,
                    weight,
                });
            }
        }
    }
    for (name, v) in &subs.measurements {
        check(name, *v)?;
        components.push(Component {
            name: name.clone(),
            value: *v,
            weight: w.measurements,
        });
    }
    if components.is_empty() {
        return Err(Error::NoComponents(subs.block_id.clone()));
    }
    Ok(WeatheringIndex {
        block_id: subs.block_id.clone(),
        campaign_id: subs.campaign_id.clone(),
        i_alteration,
        i: weighted_mean(&components),
        components,
        excluded,
        policy_hash: policy.hash(),
    })
}

fn mean_lab(campaign: &Campaign, block_id: &str) -> Option<Lab> {
    Lab::mean(campaign.measurements_for(block_id).filter_map(|m| m.colorimetry.as_ref()))
}

/// Sub-indices of one block from a campaign. `previous` is only consulted
/// by the colorimetry part of the measurement extension.
pub fn sub_indices(
    block: &Block,
    campaign: &Campaign,
    policy: &IndexPolicy,
    previous: Option<&Campaign>,
) -> Result<SubIndexSet> {
    let mut subs = SubIndexSet::new(&block.block_id, &campaign.campaign_id);
    subs.i_structure = Some(structural_index(block, &policy.structural_weights)?.value);
    for f in Family::ALL {
        let records: Vec<&AlterationRecord> = campaign.records_for(&block.block_id, f).collect();
        let surveyed = campaign.surveyed(&block.block_id, f);
        subs.set_family(f, family_subindex(&records, surveyed, &policy.rating_scale)?);
    }
    if let Some(ext) = &policy.measurement_extension {
        if let Some(prev) = previous {
            let now = mean_lab(campaign, &block.block_id);
            let before = mean_lab(prev, &block.block_id);
            if let Ok(de) = colorimetry_delta(before.as_ref(), now.as_ref()) {
                subs.measurements
                    .insert("colorimetry".into(), (de / ext.delta_e_full_scale).min(1.0) * 5.0);
            }
        }
        if ext.salt {
            let worst = campaign
                .salts_for(&block.block_id)
                .map(|a| assess_salt_contamination(a, &ext.salt_thresholds).contaminated_count())
                .max();
            if let Some(n) = worst {
                subs.measurements.insert("salt".into(), n as f64 / 3.0 * 5.0);
            }
        }
    }
    Ok(subs)
}

/// Sub-indices and the general index for every registered block, in
/// registry order.
pub fn campaign_indices(
    registry: &BlockRegistry,
    campaign: &ValidatedCampaign,
    policy: &IndexPolicy,
    previous: Option<&Campaign>,
) -> Result<Vec<(SubIndexSet, WeatheringIndex)>> {
    policy.validate()?;
    registry
        .blocks
        .par_iter()
        .map(|b| {
            let subs = sub_indices(b, campaign, policy, previous)?;
            let idx = weathering_index(&subs, policy)?;
            Ok((subs, idx))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn record(coverage: f64, pattern: &str) -> AlterationRecord {
        AlterationRecord {
            block_id: "SW-01".into(),
            family: Family::Detachment,
            pattern: pattern.into(),
            coverage_pct: coverage,
            notes: String::new(),
        }
    }

    #[test]
    fn cap_and_sum() {
        let s = RatingScale::default();
        let (a, b) = (record(10.0, "scaling"), record(20.0, "flaking"));
        assert_eq!(family_subindex(&[&a, &b], true, &s).unwrap(), Some(3.0));
        assert_eq!(family_subindex(&[], true, &s).unwrap(), Some(0.0));
        assert_eq!(family_subindex(&[], false, &s).unwrap(), None);
        let (c, d) = (record(70.0, "scaling"), record(70.0, "flaking"));
        assert_eq!(family_subindex(&[&c, &d], true, &s).unwrap(), Some(5.0));
        let mut e = record(5.0, "x");
        e.family = Family::MaterialLoss;
        assert!(family_subindex(&[&a, &e], true, &s).is_err());
    }

    fn set(families: [Option<f64>; 5], structure: Option<f64>) -> SubIndexSet {
        SubIndexSet {
            families,
            i_structure: structure,
            ..SubIndexSet::new("SW-01", "C1")
        }
    }

    #[test]
    fn documented_examples() {
        let p = IndexPolicy::default();
        let w = weathering_index(&set([Some(2.0), Some(3.0), Some(4.0), Some(1.0), Some(0.0)], Some(2.0)), &p).unwrap();
        assert_eq!(w.i_alteration, Some(2.0));
        assert_eq!(w.i, 2.0);
        assert_eq!(w.components.len(), 6);
        assert_eq!(w.policy_hash, p.hash());
        assert_eq!(weathering_index(&set([Some(0.0); 5], Some(0.0)), &p).unwrap().i, 0.0);
        assert_eq!(weathering_index(&set([Some(5.0); 5], Some(5.0)), &p).unwrap().i, 5.0);
        assert!(matches!(weathering_index(&set([None; 5], None), &p), Err(Error::NoComponents(_))));
        assert!(matches!(weathering_index(&set([Some(6.0), None, None, None, None], None), &p), Err(Error::Domain(_))));
    }

    #[test]
    fn missing_is_excluded_not_zero() {
        let p = IndexPolicy::default();
        let w = weathering_index(&set([Some(4.0), None, None, Some(2.0), None], Some(3.0)), &p).unwrap();
        assert_eq!(w.i, 3.0);
        assert_eq!(w.i_alteration, Some(3.0));
        assert_eq!(w.excluded, vec!["detachment", "material_loss", "biological_colonization"]);
        let z = weathering_index(&set([Some(4.0), Some(0.0), Some(0.0), Some(2.0), Some(0.0)], Some(3.0)), &p).unwrap();
        assert!(z.i < w.i);
    }

    #[test]
    fn structure_with_alteration_mode() {
        let p = IndexPolicy {
            mode: AveragingMode::StructureWithAlteration,
            ..Default::default()
        };
        let w = weathering_index(&set([Some(4.0), Some(2.0), None, None, None], Some(1.0)), &p).unwrap();
        assert_eq!(w.i, 2.0);
        assert_eq!(w.components.len(), 2);
    }

    #[test]
    fn whole_campaign() {
        let reg = fixtures::strasbourg_blocks();
        let c = ValidatedCampaign::new(fixtures::initial_campaign(&reg, 5), &reg).unwrap();
        let out = campaign_indices(&reg, &c, &IndexPolicy::default(), None).unwrap();
        assert_eq!(out.len(), 78);
        assert!(out.iter().all(|(_, w)| (0.0..=5.0).contains(&w.i)));
        assert!(out.iter().all(|(s, _)| s.measurements.is_empty()));

        let ext = IndexPolicy {
            measurement_extension: Some(Default::default()),
            ..Default::default()
        };
        let later = fixtures::follow_up_campaign(&c, chrono::NaiveDate::from_ymd_opt(2024, 10, 1).unwrap(), 5);
        let later = ValidatedCampaign::new(later, &reg).unwrap();
        let out = campaign_indices(&reg, &later, &ext, Some(&c)).unwrap();
        let sw1 = &out.iter().find(|(s, _)| s.block_id == "SW-01").unwrap().0;
        assert!(sw1.measurements.contains_key("colorimetry"));
        let first = campaign_indices(&reg, &c, &ext, None).unwrap();
        let sw18 = &first.iter().find(|(s, _)| s.block_id == "SW-18").unwrap().0;
        // reference drilling: sulfate contaminated only
        assert!((sw18.measurements["salt"] - 5.0 / 3.0).abs() < 1e-12);
    }

    fn component() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![1 => Just(None), 4 => (0.0f64..=5.0).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn bounded_and_equal_to_mean(fams in proptest::array::uniform5(component()), s in component()) {
            let subs = set(fams, s);
            match weathering_index(&subs, &IndexPolicy::default()) {
                Ok(w) => {
                    let vals: Vec<f64> = fams.iter().chain(std::iter::once(&s)).flatten().copied().collect();
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    prop_assert!((w.i - mean).abs() < 1e-12);
                    prop_assert!((0.0..=5.0).contains(&w.i));
                }
                Err(_) => prop_assert!(fams.iter().all(Option::is_none) && s.is_none()),
            }
        }

        #[test]
        fn raising_coverage_never_lowers_index(
            base in proptest::collection::vec(0.0f64..60.0, 1..4),
            bump in 0.0f64..50.0,
            which in 0usize..3,
        ) {
            let scale = RatingScale::default();
            let p = IndexPolicy::default();
            let recs: Vec<AlterationRecord> = base.iter().enumerate().map(|(k, c)| record(*c, &format!("p{k}"))).collect();
            let mut raised = recs.clone();
            let k = which % raised.len();
            raised[k].coverage_pct = (raised[k].coverage_pct + bump).min(100.0);
            let r0 = family_subindex(&recs.iter().collect::<Vec<_>>(), true, &scale).unwrap();
            let r1 = family_subindex(&raised.iter().collect::<Vec<_>>(), true, &scale).unwrap();
            prop_assert!(r1 >= r0);
            let mut a = set([Some(1.0), r0, Some(2.0), None, Some(0.0)], Some(3.0));
            let i0 = weathering_index(&a, &p).unwrap();
            a.families[1] = r1;
            let i1 = weathering_index(&a, &p).unwrap();
            prop_assert!(i1.i >= i0.i && i1.i_alteration >= i0.i_alteration);
        }
    }
}
