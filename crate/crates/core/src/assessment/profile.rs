use serde::{Deserialize, Serialize};

use super::salt::SaltAnalysis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoistureOrigin {
    /// Water content rises with depth: water comes from inside the masonry.
    InteriorSource,
    /// Water content falls with depth.
    SurfaceSource,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthProfile {
    pub drilling_id: String,
    /// Layers sorted by depth.
    pub layers: Vec<SaltAnalysis>,
    pub hint: MoistureOrigin,
}

impl DepthProfile {
    pub fn water_contents(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.w).collect()
    }
}

/// Orders one drilling's analyses by depth and reads the water-content
/// gradient. A single layer is inconclusive.
pub fn depth_profile(analyses: &[SaltAnalysis]) -> Result<DepthProfile> {
    let first = analyses
        .first()
        .ok_or_else(|| Error::NoData("depth profile needs at least one analysis".into()))?;
    if let Some(other) = analyses.iter().find(|a| a.drilling_id != first.drilling_id) {
        return Err(Error::InvalidParameter(format!(
            "analyses from drillings {} and {} mixed in one profile",
            first.drilling_id, other.drilling_id
        )));
    }
    let mut layers = analyses.to_vec();
    layers.sort_by(|a, b| a.depth_cm[0].total_cmp(&b.depth_cm[0]).then(a.depth_cm[1].total_cmp(&b.depth_cm[1])));
    for l in &layers {
        if !(l.depth_cm[0] < l.depth_cm[1]) {
            return Err(Error::InvalidParameter(format!(
                "empty depth interval [{}, {}] cm",
                l.depth_cm[0], l.depth_cm[1]
            )));
        }
    }
    for pair in layers.windows(2) {
        if pair[1].depth_cm[0] < pair[0].depth_cm[1] {
            return Err(Error::OverlappingIntervals(format!(
                "[{}, {}] and [{}, {}] cm in drilling {}",
                pair[0].depth_cm[0], pair[0].depth_cm[1], pair[1].depth_cm[0], pair[1].depth_cm[1], first.drilling_id
            )));
        }
    }
    let rising = layers.len() > 1 && layers.windows(2).all(|p| p[1].w > p[0].w);
    let falling = layers.len() > 1 && layers.windows(2).all(|p| p[1].w < p[0].w);
    let hint = if rising {
        MoistureOrigin::InteriorSource
    } else if falling {
        MoistureOrigin::SurfaceSource
    } else {
        MoistureOrigin::Inconclusive
    };
    Ok(DepthProfile {
        drilling_id: first.drilling_id.clone(),
        layers,
        hint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_drilling;
    use proptest::prelude::*;

    fn with_w(ws: &[f64]) -> Vec<SaltAnalysis> {
        let base = reference_drilling();
        ws.iter()
            .enumerate()
            .map(|(i, w)| SaltAnalysis { w: *w, depth_cm: [i as f64 * 2.0, i as f64 * 2.0 + 2.0], ..base[0].clone() })
            .collect()
    }

    #[test]
    fn reference_drilling_points_inward() {
        let p = depth_profile(&reference_drilling()).unwrap();
        assert_eq!(p.water_contents(), vec![1.2, 4.7, 9.2]);
        assert_eq!(p.hint, MoistureOrigin::InteriorSource);
    }

    #[test]
    fn other_gradients() {
        assert_eq!(depth_profile(&with_w(&[9.0, 5.0, 1.0])).unwrap().hint, MoistureOrigin::SurfaceSource);
        assert_eq!(depth_profile(&with_w(&[5.0, 9.0, 2.0])).unwrap().hint, MoistureOrigin::Inconclusive);
        assert_eq!(depth_profile(&with_w(&[5.0, 5.0])).unwrap().hint, MoistureOrigin::Inconclusive);
        assert_eq!(depth_profile(&with_w(&[5.0])).unwrap().hint, MoistureOrigin::Inconclusive);
    }

    #[test]
    fn overlap_and_mixing_rejected() {
        let mut layers = reference_drilling();
        layers[1].depth_cm = [0.5, 4.0];
        assert!(matches!(depth_profile(&layers), Err(Error::OverlappingIntervals(_))));
        let mut layers = reference_drilling();
        layers[2].drilling_id = "S2".into();
        assert!(matches!(depth_profile(&layers), Err(Error::InvalidParameter(_))));
        assert!(depth_profile(&[]).is_err());
    }

    proptest! {
        #[test]
        fn hint_ignores_input_order(ws in proptest::collection::vec(0.0f64..15.0, 1..8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let layers = with_w(&ws);
            let base = depth_profile(&layers).unwrap();
            let mut shuffled = layers.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = depth_profile(&shuffled).unwrap();
            prop_assert_eq!(p.hint, base.hint);
            prop_assert_eq!(p.layers, base.layers);
        }
    }
}
