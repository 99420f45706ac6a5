//! Dew point from air temperature and relative humidity (Magnus form).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Magnus coefficients: `a` is dimensionless, `b` in °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnusCoefficients {
    pub a: f64,
    pub b: f64,
}

impl Default for MagnusCoefficients {
    fn default() -> Self {
        MagnusCoefficients {
            a: 17.62,
            b: 243.12,
        }
    }
}

pub const MIN_TEMP: f64 = -45.0;
pub const MAX_TEMP: f64 = 60.0;

/// Dew point in °C with the default coefficients.
pub fn dew_point(temp_c: f64, rh_pct: f64) -> Result<f64> {
    dew_point_with(temp_c, rh_pct, MagnusCoefficients::default())
}

/// `Td = b·γ / (a − γ)` with `γ = ln(RH/100) + a·T / (b + T)`.
/// Saturated air returns `T` exactly.
pub fn dew_point_with(temp_c: f64, rh_pct: f64, k: MagnusCoefficients) -> Result<f64> {
    if !(rh_pct > 0.0 && rh_pct <= 100.0) {
        return Err(Error::Domain(format!("relative humidity {rh_pct} % not in (0, 100]")));
    }
    if !(MIN_TEMP..=MAX_TEMP).contains(&temp_c) {
        return Err(Error::Domain(format!(
            "temperature {temp_c} °C not in [{MIN_TEMP}, {MAX_TEMP}]"
        )));
    }
    if rh_pct == 100.0 {
        return Ok(temp_c);
    }
    let gamma = (rh_pct / 100.0).ln() + k.a * temp_c / (k.b + temp_c);
    Ok(k.b * gamma / (k.a - gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_identity() {
        assert_eq!(dew_point(20.0, 100.0).unwrap(), 20.0);
        assert_eq!(dew_point(0.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_values() {
        // direct evaluation of the Magnus expression, computed outside this crate
        let cases = [
            (25.0, 50.0, 13.851583599891661),
            (-10.0, 60.0, -16.305173724827156),
            (35.0, 20.0, 8.68824573243711),
        ];
        for (t, rh, td) in cases {
            assert!((dew_point(t, rh).unwrap() - td).abs() < 1e-9, "{t} {rh}");
        }
        assert!((dew_point(25.0, 50.0).unwrap() - 13.85).abs() < 0.01);
    }

    #[test]
    fn domain_errors() {
        assert!(dew_point(20.0, 0.0).is_err());
        assert!(dew_point(20.0, -3.0).is_err());
        assert!(dew_point(20.0, 100.5).is_err());
        assert!(dew_point(-46.0, 50.0).is_err());
        assert!(dew_point(61.0, 50.0).is_err());
        assert!(dew_point(f64::NAN, 50.0).is_err());
    }

    #[test]
    fn below_saturation_is_below_air_temperature() {
        for t in [-40.0, -5.0, 0.0, 12.5, 39.6] {
            for rh in [1.0, 29.5, 70.5, 99.0, 99.999] {
                assert!(dew_point(t, rh).unwrap() < t, "{t} {rh}");
            }
        }
    }
}
