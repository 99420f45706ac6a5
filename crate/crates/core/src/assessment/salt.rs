//! Soluble-salt laboratory results and contamination flags.

use serde::{Deserialize, Serialize};

/// Ion-chromatography and gravimetric results for one depth interval of a
/// drilling. All values are mass percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltAnalysis {
    pub drilling_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_id: Option<String>,
    /// `[from, to]` in cm below the surface.
    pub depth_cm: [f64; 2],
    pub chloride: f64,
    pub nitrate: f64,
    pub sulfate: f64,
    pub sodium: f64,
    pub magnesium: f64,
    pub calcium: f64,
    /// Water content.
    pub w: f64,
    /// Hygroscopic water content.
    pub w_h: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identified_phases: Vec<String>,
}

impl SaltAnalysis {
    pub fn percent_fields(&self) -> [(&'static str, f64); 8] {
        [
            ("chloride", self.chloride),
            ("nitrate", self.nitrate),
            ("sulfate", self.sulfate),
            ("sodium", self.sodium),
            ("magnesium", self.magnesium),
            ("calcium", self.calcium),
            ("w", self.w),
            ("w_h", self.w_h),
        ]
    }
}

/// SO₄ mass bound per unit of Ca mass in gypsum (M(SO₄) / M(Ca)).
const SULFATE_PER_CALCIUM: f64 = 96.06 / 40.078;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaltThresholds {
    pub chloride: f64,
    pub sulfate: f64,
    pub nitrate: f64,
    /// w_h at or above which, together with a sulfate exceedance, sulfated
    /// hygroscopic salts are suspected.
    pub hygroscopic_w_h: f64,
    /// Subtract the gypsum-equivalent sulfate (from calcium, capped at the
    /// measured sulfate) before comparing. Off by default. When on, more
    /// calcium means less effective sulfate.
    pub subtract_gypsum: bool,
}

impl Default for SaltThresholds {
    fn default() -> Self {
        SaltThresholds {
            chloride: 0.1,
            sulfate: 0.1,
            nitrate: 0.5,
            hygroscopic_w_h: 5.0,
            subtract_gypsum: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Contaminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonFlag {
    pub verdict: Verdict,
    pub value: f64,
    pub threshold: f64,
}

impl IonFlag {
    fn judge(value: f64, threshold: f64) -> Self {
        IonFlag {
            verdict: if value > threshold {
                Verdict::Contaminated
            } else {
                Verdict::Ok
            },
            value,
            threshold,
        }
    }

    pub fn contaminated(&self) -> bool {
        self.verdict == Verdict::Contaminated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationFlags {
    pub chloride: IonFlag,
    pub nitrate: IonFlag,
    pub sulfate: IonFlag,
    pub hygroscopic_salt_suspected: bool,
}

impl ContaminationFlags {
    pub fn contaminated_count(&self) -> usize {
        [self.chloride, self.nitrate, self.sulfate]
            .iter()
            .filter(|f| f.contaminated())
            .count()
    }
}

/// Flags each ion strictly above its permissible content.
pub fn assess_salt_contamination(analysis: &SaltAnalysis, thresholds: &SaltThresholds) -> ContaminationFlags {
    let sulfate = if thresholds.subtract_gypsum {
        let bound = (analysis.calcium * SULFATE_PER_CALCIUM).min(analysis.sulfate).max(0.0);
        analysis.sulfate - bound
    } else {
        analysis.sulfate
    };
    let sulfate = IonFlag::judge(sulfate, thresholds.sulfate);
    ContaminationFlags {
        chloride: IonFlag::judge(analysis.chloride, thresholds.chloride),
        nitrate: IonFlag::judge(analysis.nitrate, thresholds.nitrate),
        hygroscopic_salt_suspected: analysis.w_h >= thresholds.hygroscopic_w_h && sulfate.contaminated(),
        sulfate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_drilling;
    use proptest::prelude::*;

    #[test]
    fn middle_layer_of_reference_drilling() {
        let layer = &reference_drilling()[1];
        assert_eq!(layer.depth_cm, [1.0, 4.0]);
        let f = assess_salt_contamination(layer, &SaltThresholds::default());
        assert_eq!(f.chloride.verdict, Verdict::Ok);
        assert_eq!(f.nitrate.verdict, Verdict::Ok);
        assert_eq!(f.sulfate.verdict, Verdict::Contaminated);
        assert_eq!(f.sulfate.value, 5.51);
        assert_eq!(f.sulfate.threshold, 0.1);
        assert!(f.hygroscopic_salt_suspected);
    }

    #[test]
    fn all_zero_and_boundary() {
        let mut a = reference_drilling()[0].clone();
        for v in [&mut a.chloride, &mut a.nitrate, &mut a.sulfate, &mut a.sodium, &mut a.magnesium, &mut a.calcium, &mut a.w, &mut a.w_h] {
            *v = 0.0;
        }
        let f = assess_salt_contamination(&a, &SaltThresholds::default());
        assert_eq!(f.contaminated_count(), 0);
        assert!(!f.hygroscopic_salt_suspected);
        a.sulfate = 0.1;
        a.w_h = 20.0;
        let f = assess_salt_contamination(&a, &SaltThresholds::default());
        assert_eq!(f.sulfate.verdict, Verdict::Ok);
        assert!(!f.hygroscopic_salt_suspected);
    }

    #[test]
    fn gypsum_subtraction_is_opt_in() {
        let layer = &reference_drilling()[2]; // sulfate 0.47, calcium 0.38
        let plain = assess_salt_contamination(layer, &SaltThresholds::default());
        assert!(plain.sulfate.contaminated());
        let th = SaltThresholds { subtract_gypsum: true, ..Default::default() };
        let net = assess_salt_contamination(layer, &th);
        // 0.38 % Ca binds more than 0.47 % SO4, nothing is left over
        assert_eq!(net.sulfate.value, 0.0);
        assert!(!net.sulfate.contaminated());
    }

    proptest! {
        #[test]
        fn raising_an_ion_never_clears_a_flag(
            base in proptest::array::uniform6(0.0f64..2.0),
            bump in 0.0f64..3.0,
            which in 0usize..6,
            w_h in 0.0f64..15.0,
        ) {
            let mut a = reference_drilling()[0].clone();
            a.chloride = base[0]; a.nitrate = base[1]; a.sulfate = base[2];
            a.sodium = base[3]; a.magnesium = base[4]; a.calcium = base[5];
            a.w_h = w_h;
            let before = assess_salt_contamination(&a, &SaltThresholds::default());
            match which {
                0 => a.chloride += bump, 1 => a.nitrate += bump, 2 => a.sulfate += bump,
                3 => a.sodium += bump, 4 => a.magnesium += bump, _ => a.calcium += bump,
            }
            let after = assess_salt_contamination(&a, &SaltThresholds::default());
            for (b, c) in [(before.chloride, after.chloride), (before.nitrate, after.nitrate), (before.sulfate, after.sulfate)] {
                prop_assert!(!(b.contaminated() && !c.contaminated()));
            }
            prop_assert!(!(before.hygroscopic_salt_suspected && !after.hygroscopic_salt_suspected));
        }
    }
}
