use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CIE L*a*b* colour coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub fn new(l: f64, a: f64, b: f64) -> Self {
        Lab { l, a, b }
    }

    /// CIE76 colour difference.
    pub fn delta_e(&self, other: &Lab) -> f64 {
        ((self.l - other.l).powi(2) + (self.a - other.a).powi(2) + (self.b - other.b).powi(2)).sqrt()
    }

    /// Component-wise mean, or `None` for an empty input.
    pub fn mean<'a>(labs: impl IntoIterator<Item = &'a Lab>) -> Option<Lab> {
        let mut n = 0.0;
        let mut acc = Lab::new(0.0, 0.0, 0.0);
        for lab in labs {
            n += 1.0;
            acc.l += lab.l;
            acc.a += lab.a;
            acc.b += lab.b;
        }
        (n > 0.0).then(|| Lab::new(acc.l / n, acc.a / n, acc.b / n))
    }
}

/// ΔE between two colorimetry readings; both must be present.
pub fn colorimetry_delta(first: Option<&Lab>, second: Option<&Lab>) -> Result<f64> {
    match (first, second) {
        (Some(a), Some(b)) => Ok(a.delta_e(b)),
        _ => Err(Error::MissingMeasurement("colorimetry reading missing".into())),
    }
}
