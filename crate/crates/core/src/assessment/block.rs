use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::Face;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    VosgesSandstone,
    BitburgSandstone,
    StaubSandstone,
    Granite,
    BarutelLimestone,
    EstailladeLimestone,
    Other,
}

impl Material {
    pub const ALL: [Material; 7] = [
        Material::VosgesSandstone,
        Material::BitburgSandstone,
        Material::StaubSandstone,
        Material::Granite,
        Material::BarutelLimestone,
        Material::EstailladeLimestone,
        Material::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Material::VosgesSandstone => "vosges_sandstone",
            Material::BitburgSandstone => "bitburg_sandstone",
            Material::StaubSandstone => "staub_sandstone",
            Material::Granite => "granite",
            Material::BarutelLimestone => "barutel_limestone",
            Material::EstailladeLimestone => "estaillade_limestone",
            Material::Other => "other",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    InSitu,
    ControlBatch,
}

impl BlockKind {
    pub fn label(self) -> &'static str {
        match self {
            BlockKind::InSitu => "in_situ",
            BlockKind::ControlBatch => "control_batch",
        }
    }
}

/// One mapped sub-zone: a masonry block, or a control-batch cube set on
/// site for natural ageing. One block is one matrix row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub block_id: String,
    pub site_id: String,
    pub face: Face,
    /// Metres above ground.
    pub height_band_m: f64,
    pub material: Material,
    pub kind: BlockKind,
    /// Structural configuration class scored by the structural index
    /// (e.g. `exposed`, `under_cornice`).
    pub configuration: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_date: Option<NaiveDate>,
}

pub const BLOCK_REGISTRY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRegistry {
    pub schema_version: u32,
    pub site_id: String,
    pub blocks: Vec<Block>,
}

impl BlockRegistry {
    pub fn new(site_id: impl Into<String>, blocks: Vec<Block>) -> Result<Self> {
        let reg = BlockRegistry {
            schema_version: BLOCK_REGISTRY_SCHEMA_VERSION,
            site_id: site_id.into(),
            blocks,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let reg: BlockRegistry = serde_json::from_str(raw)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != BLOCK_REGISTRY_SCHEMA_VERSION {
            return Err(Error::SchemaViolation(format!(
                "unsupported block registry schema_version {}",
                self.schema_version
            )));
        }
        let mut ids = BTreeSet::new();
        for b in &self.blocks {
            let bad = |m: &str| Err(Error::SchemaViolation(format!("block {}: {m}", b.block_id)));
            if b.block_id.trim().is_empty() {
                return bad("empty block_id");
            }
            if !ids.insert(b.block_id.as_str()) {
                return bad("duplicate block_id");
            }
            if b.site_id != self.site_id {
                return bad(&format!("site {} differs from registry site {}", b.site_id, self.site_id));
            }
            if !b.height_band_m.is_finite() {
                return bad("height must be finite");
            }
            if b.kind == BlockKind::ControlBatch && b.placement_date.is_none() {
                return bad("control-batch blocks need a placement_date");
            }
        }
        Ok(())
    }

    pub fn get(&self, block_id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.block_id == block_id)
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.blocks.iter().map(|b| b.block_id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
