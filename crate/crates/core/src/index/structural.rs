use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assessment::{Block, Material};
use crate::ingest::Face;
use crate::{Error, Result};

/// Half-open height band `[min_m, max_m)` and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightBand {
    pub min_m: f64,
    pub max_m: f64,
    pub score: f64,
}

/// Scores in [0, 5] for each structural attribute. `face` is optional; when
/// absent the face does not enter the structural index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralWeights {
    pub material: BTreeMap<Material, f64>,
    pub height_bands: Vec<HeightBand>,
    pub configuration: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<BTreeMap<Face, f64>>,
}

impl Default for StructuralWeights {
    /// Declared convention: sandstones score by known susceptibility,
    /// higher courses score worse, blocks under the cornice take run-off.
    fn default() -> Self {
        let material = [
            (Material::VosgesSandstone, 3.0),
            (Material::BitburgSandstone, 3.0),
            (Material::StaubSandstone, 3.0),
            (Material::Granite, 1.0),
            (Material::BarutelLimestone, 2.0),
            (Material::EstailladeLimestone, 3.0),
            (Material::Other, 2.5),
        ]
        .into_iter()
        .collect();
        let height_bands = vec![
            HeightBand { min_m: f64::MIN, max_m: 20.0, score: 1.0 },
            HeightBand { min_m: 20.0, max_m: 60.0, score: 2.0 },
            HeightBand { min_m: 60.0, max_m: 100.0, score: 3.0 },
            HeightBand { min_m: 100.0, max_m: f64::MAX, score: 4.0 },
        ];
        let configuration = [
            ("sheltered", 1.0),
            ("control_rack", 1.0),
            ("exposed", 3.0),
            ("under_cornice", 4.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        StructuralWeights {
            material,
            height_bands,
            configuration,
            face: None,
        }
    }
}

impl StructuralWeights {
    pub fn validate(&self) -> Result<()> {
        let scores = self
            .material
            .values()
            .chain(self.height_bands.iter().map(|b| &b.score))
            .chain(self.configuration.values())
            .chain(self.face.iter().flat_map(|m| m.values()));
        for s in scores {
            if !(0.0..=5.0).contains(s) {
                return Err(Error::Config(format!("structural score {s} outside [0, 5]")));
            }
        }
        for b in &self.height_bands {
            if !(b.min_m < b.max_m) {
                return Err(Error::Config(format!("empty height band [{}, {})", b.min_m, b.max_m)));
            }
        }
        Ok(())
    }
}

/// The structural index and the attribute scores that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralScore {
    pub value: f64,
    pub attributes: Vec<(String, f64)>,
}

/// Mean of the block's attribute scores.
pub fn structural_index(block: &Block, weights: &StructuralWeights) -> Result<StructuralScore> {
    let missing = |what: String| Error::Config(format!("block {}: no structural score for {what}", block.block_id));
    let mut attributes = Vec::with_capacity(4);
    let material = weights
        .material
        .get(&block.material)
        .ok_or_else(|| missing(format!("material {}", block.material)))?;
    attributes.push(("material".to_string(), *material));
    let height = weights
        .height_bands
        .iter()
        .find(|b| b.min_m <= block.height_band_m && block.height_band_m < b.max_m)
        .ok_or_else(|| missing(format!("height {} m", block.height_band_m)))?;
    attributes.push(("height".to_string(), height.score));
    let config = weights
        .configuration
        .get(&block.configuration)
        .ok_or_else(|| missing(format!("configuration {}", block.configuration)))?;
    attributes.push(("configuration".to_string(), *config));
    if let Some(faces) = &weights.face {
        let f = faces.get(&block.face).ok_or_else(|| missing(format!("face {}", block.face)))?;
        attributes.push(("face".to_string(), *f));
    }
    let value = attributes.iter().map(|a| a.1).sum::<f64>() / attributes.len() as f64;
    Ok(StructuralScore { value, attributes })
}
