//! Assessment campaigns and their validation against the block registry.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::block::BlockRegistry;
use super::color::Lab;
use super::salt::SaltAnalysis;
use crate::{Error, Result};

/// The five deterioration families alteration patterns are grouped under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CracksDeformation,
    Detachment,
    MaterialLoss,
    ChromaticDeposit,
    BiologicalColonization,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::CracksDeformation,
        Family::Detachment,
        Family::MaterialLoss,
        Family::ChromaticDeposit,
        Family::BiologicalColonization,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::CracksDeformation => "cracks_deformation",
            Family::Detachment => "detachment",
            Family::MaterialLoss => "material_loss",
            Family::ChromaticDeposit => "chromatic_deposit",
            Family::BiologicalColonization => "biological_colonization",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlterationRecord {
    pub block_id: String,
    pub family: Family,
    /// Glossary sub-type, free text (e.g. "scaling", "efflorescence").
    pub pattern: String,
    pub coverage_pct: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeasurement {
    pub block_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colorimetry: Option<Lab>,
    /// Capacitive meter reading in the instrument's own scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_humidity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instrument_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

/// A block assessed in the campaign. `surveyed_families = None` means all
/// five families were surveyed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRef {
    pub block_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surveyed_families: Option<Vec<Family>>,
}

pub const CAMPAIGN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub schema_version: u32,
    pub campaign_id: String,
    pub site_id: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub block_refs: Vec<BlockRef>,
    #[serde(default)]
    pub alterations: Vec<AlterationRecord>,
    #[serde(default)]
    pub surface_measurements: Vec<SurfaceMeasurement>,
    #[serde(default)]
    pub salt_analyses: Vec<SaltAnalysis>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl Campaign {
    pub fn from_json(raw: &str) -> Result<Self> {
        let c: Campaign = serde_json::from_str(raw)?;
        if c.schema_version != CAMPAIGN_SCHEMA_VERSION {
            return Err(Error::SchemaViolation(format!(
                "unsupported campaign schema_version {}",
                c.schema_version
            )));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("campaign serialises")
    }

    pub fn block_ref(&self, block_id: &str) -> Option<&BlockRef> {
        self.block_refs.iter().find(|r| r.block_id == block_id)
    }

    /// Whether `family` was looked at on `block_id`. Blocks absent from
    /// `block_refs` were not assessed at all.
    pub fn surveyed(&self, block_id: &str, family: Family) -> bool {
        match self.block_ref(block_id) {
            None => false,
            Some(BlockRef {
                surveyed_families: None,
                ..
            }) => true,
            Some(BlockRef {
                surveyed_families: Some(f),
                ..
            }) => f.contains(&family),
        }
    }

    pub fn records_for<'a>(
        &'a self,
        block_id: &'a str,
        family: Family,
    ) -> impl Iterator<Item = &'a AlterationRecord> + 'a {
        self.alterations
            .iter()
            .filter(move |r| r.block_id == block_id && r.family == family)
    }

    pub fn measurements_for<'a>(&'a self, block_id: &'a str) -> impl Iterator<Item = &'a SurfaceMeasurement> + 'a {
        self.surface_measurements.iter().filter(move |m| m.block_id == block_id)
    }

    pub fn salts_for<'a>(&'a self, block_id: &'a str) -> impl Iterator<Item = &'a SaltAnalysis> + 'a {
        self.salt_analyses
            .iter()
            .filter(move |s| s.block_id.as_deref() == Some(block_id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    SiteMismatch { expected: String, found: String },
    UnknownBlock { block_id: String, section: &'static str },
    DuplicateBlockRef { block_id: String },
    CoverageOutOfRange { block_id: String, family: Family, pattern: String, value: f64 },
    DuplicateAlteration { block_id: String, family: Family, pattern: String },
    UnsurveyedRecord { block_id: String, family: Family },
    LightnessOutOfRange { block_id: String, value: f64 },
    NegativePercent { drilling_id: String, field: &'static str, value: f64 },
    InvalidDepthInterval { drilling_id: String, start: f64, end: f64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::SiteMismatch { expected, found } => {
                write!(f, "site_id {found} does not match registry site {expected}")
            }
            Finding::UnknownBlock { block_id, section } => {
                write!(f, "unknown block {block_id} referenced in {section}")
            }
            Finding::DuplicateBlockRef { block_id } => write!(f, "block {block_id} listed twice in block_refs"),
            Finding::CoverageOutOfRange { block_id, family, pattern, value } => {
                write!(f, "coverage {value} % of {family}/{pattern} on {block_id} outside [0, 100]")
            }
            Finding::DuplicateAlteration { block_id, family, pattern } => {
                write!(f, "duplicate alteration {family}/{pattern} on {block_id}")
            }
            Finding::UnsurveyedRecord { block_id, family } => {
                write!(f, "alteration recorded for {family} on {block_id}, which was not surveyed")
            }
            Finding::LightnessOutOfRange { block_id, value } => {
                write!(f, "L* {value} on {block_id} outside [0, 100]")
            }
            Finding::NegativePercent { drilling_id, field, value } => {
                write!(f, "{field} = {value} in drilling {drilling_id} is negative or not finite")
            }
            Finding::InvalidDepthInterval { drilling_id, start, end } => {
                write!(f, "depth interval [{start}, {end}] cm in drilling {drilling_id} is empty")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub campaign_id: String,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks a campaign against the registry. The findings come back sorted
/// and deduplicated, so the report does not depend on record order.
pub fn validate_campaign(campaign: &Campaign, registry: &BlockRegistry) -> ValidationReport {
    let ids = registry.ids();
    let mut findings = Vec::new();
    let unknown = |block_id: &str, section: &'static str, out: &mut Vec<Finding>| {
        if !ids.contains(block_id) {
            out.push(Finding::UnknownBlock {
                block_id: block_id.to_string(),
                section,
            });
        }
    };

    if campaign.site_id != registry.site_id {
        findings.push(Finding::SiteMismatch {
            expected: registry.site_id.clone(),
            found: campaign.site_id.clone(),
        });
    }

    let mut ref_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &campaign.block_refs {
        unknown(&r.block_id, "block_refs", &mut findings);
        *ref_counts.entry(&r.block_id).or_default() += 1;
    }
    findings.extend(
        ref_counts
            .into_iter()
            .filter(|(_, n)| *n > 1)
            .map(|(id, _)| Finding::DuplicateBlockRef { block_id: id.to_string() }),
    );

    let mut keys: BTreeMap<(&str, Family, &str), usize> = BTreeMap::new();
    for a in &campaign.alterations {
        unknown(&a.block_id, "alterations", &mut findings);
        if !(0.0..=100.0).contains(&a.coverage_pct) {
            findings.push(Finding::CoverageOutOfRange {
                block_id: a.block_id.clone(),
                family: a.family,
                pattern: a.pattern.clone(),
                value: a.coverage_pct,
            });
        }
        if ids.contains(a.block_id.as_str()) && !campaign.surveyed(&a.block_id, a.family) {
            findings.push(Finding::UnsurveyedRecord {
                block_id: a.block_id.clone(),
                family: a.family,
            });
        }
        *keys.entry((&a.block_id, a.family, &a.pattern)).or_default() += 1;
    }
    findings.extend(keys.into_iter().filter(|(_, n)| *n > 1).map(|((b, f, p), _)| {
        Finding::DuplicateAlteration {
            block_id: b.to_string(),
            family: f,
            pattern: p.to_string(),
        }
    }));

    for m in &campaign.surface_measurements {
        unknown(&m.block_id, "surface_measurements", &mut findings);
        if let Some(lab) = &m.colorimetry {
            if !(0.0..=100.0).contains(&lab.l) {
                findings.push(Finding::LightnessOutOfRange {
                    block_id: m.block_id.clone(),
                    value: lab.l,
                });
            }
        }
    }

    for s in &campaign.salt_analyses {
        if let Some(b) = &s.block_id {
            unknown(b, "salt_analyses", &mut findings);
        }
        for (field, value) in s.percent_fields() {
            if !(value >= 0.0 && value.is_finite()) {
                findings.push(Finding::NegativePercent {
                    drilling_id: s.drilling_id.clone(),
                    field,
                    value,
                });
            }
        }
        if !(s.depth_cm[0] < s.depth_cm[1]) {
            findings.push(Finding::InvalidDepthInterval {
                drilling_id: s.drilling_id.clone(),
                start: s.depth_cm[0],
                end: s.depth_cm[1],
            });
        }
    }

    findings.sort_by_cached_key(|f| f.to_string());
    findings.dedup();
    ValidationReport {
        campaign_id: campaign.campaign_id.clone(),
        findings,
    }
}

/// A campaign whose validation report came back empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedCampaign(Campaign);

impl ValidatedCampaign {
    pub fn new(campaign: Campaign, registry: &BlockRegistry) -> Result<Self> {
        let report = validate_campaign(&campaign, registry);
        if !report.is_empty() {
            return Err(Error::UnvalidatedCampaign {
                campaign_id: campaign.campaign_id,
                findings: report.findings.len(),
            });
        }
        Ok(ValidatedCampaign(campaign))
    }

    pub fn into_inner(self) -> Campaign {
        self.0
    }
}

impl Deref for ValidatedCampaign {
    type Target = Campaign;

    fn deref(&self) -> &Campaign {
        &self.0
    }
}
