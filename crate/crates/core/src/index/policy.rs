use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scale::RatingScale;
use super::structural::StructuralWeights;
use crate::assessment::{Family, SaltThresholds};
use crate::{Error, Result};

/// What `i` averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// `i_structure` pooled with every assessed family rating.
    #[default]
    PooledSubIndices,
    /// `i_structure` averaged with `i_alteration`.
    StructureWithAlteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentWeights {
    pub structure: f64,
    pub families: BTreeMap<Family, f64>,
    pub measurements: f64,
}

impl Default for ComponentWeights {
    fn default() -> Self {
        ComponentWeights {
            structure: 1.0,
            families: Family::ALL.iter().map(|f| (*f, 1.0)).collect(),
            measurements: 1.0,
        }
    }
}

impl ComponentWeights {
    pub fn family(&self, f: Family) -> f64 {
        self.families.get(&f).copied().unwrap_or(1.0)
    }
}

/// Opt-in folding of in-situ and lab measurements into `i`. Off by
/// default: measurements are matrix columns, not index components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasurementExtension {
    /// ΔE against the previous campaign that maps to a score of 5.
    pub delta_e_full_scale: f64,
    /// Score the share of contaminated ions (worst layer) on 0–5.
    pub salt: bool,
    pub salt_thresholds: SaltThresholds,
}

impl Default for MeasurementExtension {
    fn default() -> Self {
        MeasurementExtension {
            delta_e_full_scale: 10.0,
            salt: true,
            salt_thresholds: SaltThresholds::default(),
        }
    }
}

pub const POLICY_SCHEMA_VERSION: u32 = 1;

/// Rating scale, structural scores and averaging rules. Serialised as JSON
/// and content-hashed; the hash travels with every index and matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPolicy {
    pub schema_version: u32,
    #[serde(default)]
    pub rating_scale: RatingScale,
    #[serde(default)]
    pub structural_weights: StructuralWeights,
    #[serde(default)]
    pub mode: AveragingMode,
    #[serde(default)]
    pub weights: ComponentWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_extension: Option<MeasurementExtension>,
}

impl Default for IndexPolicy {
    fn default() -> Self {
        IndexPolicy {
            schema_version: POLICY_SCHEMA_VERSION,
            rating_scale: RatingScale::default(),
            structural_weights: StructuralWeights::default(),
            mode: AveragingMode::default(),
            weights: ComponentWeights::default(),
            measurement_extension: None,
        }
    }
}

impl IndexPolicy {
    pub fn from_json(raw: &str) -> Result<Self> {
        let p: IndexPolicy = serde_json::from_str(raw)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != POLICY_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported policy schema_version {}",
                self.schema_version
            )));
        }
        self.rating_scale.validate()?;
        self.structural_weights.validate()?;
        let w = &self.weights;
        for v in [w.structure, w.measurements].iter().chain(w.families.values()) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config(format!("component weight {v} must be positive")));
            }
        }
        if let Some(ext) = &self.measurement_extension {
            if !(ext.delta_e_full_scale > 0.0) {
                return Err(Error::Config("delta_e_full_scale must be positive".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("policy serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}
