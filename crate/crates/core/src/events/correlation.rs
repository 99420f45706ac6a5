use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::ingest::GridSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    /// Positive lags pair the crack at `t` with the climate at `t − lag`:
    /// the crack responds after the climate.
    pub lag_minutes: i64,
    /// Pearson coefficient; `None` when either side has zero variance.
    pub r: Option<f64>,
    pub n: usize,
}

pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of crack width against a climate channel at every
/// lag in `−max_lag ..= max_lag` stepping by `lag_step`. Both series must
/// share one grid; `lag_step` must be a positive multiple of its interval.
pub fn crack_climate_correlation(
    crack: &GridSeries,
    climate: &GridSeries,
    max_lag: Duration,
    lag_step: Duration,
) -> Result<Vec<LagCorrelation>> {
    if crack.grid != climate.grid {
        return Err(Error::MisalignedInput);
    }
    let cell = crack.grid.interval.num_milliseconds();
    let step = lag_step.num_milliseconds();
    if step <= 0 || step % cell != 0 || max_lag < Duration::zero() {
        return Err(Error::InvalidParameter(format!(
            "lag step {} min must be a positive multiple of the grid interval",
            lag_step.num_minutes()
        )));
    }
    let step_cells = step / cell;
    let max_steps = max_lag.num_milliseconds() / step;
    let len = crack.values.len() as i64;

    (-max_steps..=max_steps)
        .map(|k| {
            let shift = k * step_cells;
            let pairs: Vec<(f64, f64)> = (0..len)
                .filter_map(|i| {
                    let j = i - shift;
                    if !(0..len).contains(&j) {
                        return None;
                    }
                    Some((crack.values[i as usize]?, climate.values[j as usize]?))
                })
                .collect();
            let lag_minutes = k * lag_step.num_minutes();
            if pairs.len() < 3 {
                return Err(Error::InsufficientOverlap {
                    lag_minutes,
                    n: pairs.len(),
                });
            }
            Ok(LagCorrelation {
                lag_minutes,
                r: pearson(&pairs),
                n: pairs.len(),
            })
        })
        .collect()
}

/// Lag with the largest defined coefficient.
pub fn strongest_lag(lags: &[LagCorrelation]) -> Option<&LagCorrelation> {
    lags.iter()
        .filter(|l| l.r.is_some())
        .max_by(|a, b| a.r.partial_cmp(&b.r).expect("finite"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(values: Vec<Option<f64>>) -> GridSeries {
        GridSeries::new(Utc.with_ymd_and_hms(2024, 4, 1, 0, 0, 0).unwrap(), Duration::minutes(60), values)
    }

    #[test]
    fn affine_relation_is_perfect_at_zero_lag() {
        let rh: Vec<f64> = (0..200).map(|i| 70.0 + 20.0 * (i as f64 / 7.0).sin()).collect();
        let crack: Vec<Option<f64>> = rh.iter().map(|v| Some(0.4 + 0.002 * v)).collect();
        let lags = crack_climate_correlation(
            &grid(crack),
            &grid(rh.into_iter().map(Some).collect()),
            Duration::hours(3),
            Duration::hours(1),
        )
        .unwrap();
        assert_eq!(lags.len(), 7);
        let zero = lags.iter().find(|l| l.lag_minutes == 0).unwrap();
        assert!((zero.r.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(zero.n, 200);
        assert_eq!(lags[0].n, 197);
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rh: Vec<Option<f64>> = (0..1000).map(|_| Some(rng.gen_range(30.0..100.0))).collect();
        let crack: Vec<Option<f64>> = (0..1000).map(|_| Some(rng.gen_range(0.3..0.6))).collect();
        let lags = crack_climate_correlation(&grid(crack), &grid(rh), Duration::zero(), Duration::hours(1)).unwrap();
        assert!(lags[0].r.unwrap().abs() < 0.3, "{:?}", lags[0]);
    }

    #[test]
    fn shifted_response_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rh: Vec<f64> = (0..500).map(|_| rng.gen_range(30.0..100.0)).collect();
        // crack(t) = RH(t − 2 h)
        let crack: Vec<Option<f64>> = (0..500).map(|i| (i >= 2).then(|| rh[i - 2] * 0.01)).collect();
        let lags = crack_climate_correlation(
            &grid(crack),
            &grid(rh.into_iter().map(Some).collect()),
            Duration::hours(6),
            Duration::hours(1),
        )
        .unwrap();
        assert_eq!(strongest_lag(&lags).unwrap().lag_minutes, 120);
    }

    #[test]
    fn overlap_and_grid_checks() {
        let short = grid(vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
        assert!(matches!(
            crack_climate_correlation(&short, &short, Duration::hours(2), Duration::hours(1)),
            Err(Error::InsufficientOverlap { lag_minutes: -120, n: 2 })
        ));
        let other = GridSeries::new(short.grid.start, Duration::minutes(20), short.values.clone());
        assert!(matches!(
            crack_climate_correlation(&short, &other, Duration::zero(), Duration::hours(1)),
            Err(Error::MisalignedInput)
        ));
        assert!(crack_climate_correlation(&short, &short, Duration::zero(), Duration::minutes(90)).is_err());
    }

    #[test]
    fn constant_series_has_no_coefficient() {
        let c = grid(vec![Some(1.0); 10]);
        let lags = crack_climate_correlation(&c, &c, Duration::zero(), Duration::hours(1)).unwrap();
        assert_eq!(lags[0].r, None);
    }
}
