use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One coverage band of the rating scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingBand {
    pub rating: u8,
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
    /// Degree of affection.
    pub label: String,
    /// General aspect.
    pub aspect: String,
}

impl RatingBand {
    pub fn contains(&self, pct: f64) -> bool {
        let above = if self.lower_closed { pct >= self.lower } else { pct > self.lower };
        let below = if self.upper_closed { pct <= self.upper } else { pct < self.upper };
        above && below
    }
}

/// Coverage percentage to 0–5 rating.
///
/// The default scale has a point band for "not altered" (exactly 0 %) and
/// one for "all area affected" (exactly 100 %). The printed scale skips
/// 50–75 %; the default folds it into rating 4 so the bands are contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub bands: Vec<RatingBand>,
}

impl Default for RatingScale {
    fn default() -> Self {
        let band = |rating, lower, upper, lower_closed, upper_closed, label: &str, aspect: &str| RatingBand {
            rating,
            lower,
            upper,
            lower_closed,
            upper_closed,
            label: label.into(),
            aspect: aspect.into(),
        };
        RatingScale {
            bands: vec![
                band(0, 0.0, 0.0, true, true, "Not altered", "Not altered"),
                band(1, 0.0, 10.0, false, false, "Covers 0-10% surface", "Slightly altered"),
                band(2, 10.0, 25.0, true, false, "Covers 10-25% surface", "Moderately altered"),
                band(3, 25.0, 50.0, true, false, "Covers 25-50% surface", "Altered"),
                band(4, 50.0, 100.0, true, false, "Covers >75% surface", "Much altered"),
                band(5, 100.0, 100.0, true, true, "All area affected", "Severely altered"),
            ],
        }
    }
}

impl RatingScale {
    /// Bands must be ordered, disjoint, gap-free over [0, 100], with ratings
    /// in 0..=5 that never decrease.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("rating scale: {m}")));
        let Some(first) = self.bands.first() else {
            return fail("no bands".into());
        };
        if first.lower != 0.0 || !first.lower_closed {
            return fail("must start at a closed 0 %".into());
        }
        let last = self.bands.last().expect("non-empty");
        if last.upper != 100.0 || !last.upper_closed {
            return fail("must end at a closed 100 %".into());
        }
        for b in &self.bands {
            if b.rating > 5 {
                return fail(format!("rating {} above 5", b.rating));
            }
            let point = b.lower == b.upper;
            if b.lower > b.upper || (point && !(b.lower_closed && b.upper_closed)) {
                return fail(format!("band for rating {} is empty", b.rating));
            }
        }
        for pair in self.bands.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.rating < a.rating {
                return fail("ratings decrease with coverage".into());
            }
            // exactly one of the two sides owns the shared edge
            if a.upper != b.lower || a.upper_closed == b.lower_closed {
                return fail(format!(
                    "bands {} and {} leave a gap or overlap at {} %",
                    a.rating, b.rating, a.upper
                ));
            }
        }
        Ok(())
    }

    pub fn band_for(&self, coverage_pct: f64) -> Result<&RatingBand> {
        if !(0.0..=100.0).contains(&coverage_pct) {
            return Err(Error::Domain(format!("coverage {coverage_pct} % outside [0, 100]")));
        }
        self.bands
            .iter()
            .find(|b| b.contains(coverage_pct))
            .ok_or_else(|| Error::Config(format!("rating scale has no band for {coverage_pct} %")))
    }
}

pub fn rating_from_coverage(coverage_pct: f64, scale: &RatingScale) -> Result<u8> {
    scale.band_for(coverage_pct).map(|b| b.rating)
}
