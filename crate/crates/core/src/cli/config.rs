//! Site configuration and setting resolution.
//!
//! A setting comes from the first of: command-line flag, environment
//! variable `WEATHERMATRIX_<NAME>`, the site config file, built-in default.

use std::fmt;
use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::assessment::SaltThresholds;
use crate::events::SoakingThresholds;
use crate::pipeline::ClimateOptions;
use crate::time::Period;
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "WEATHERMATRIX_";

/// Optional event-counting overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdOverrides {
    pub freeze_threshold: Option<f64>,
    pub freeze_hysteresis: Option<f64>,
    pub condensation_hysteresis: Option<f64>,
    pub rh_day_threshold: Option<f64>,
    pub soaking_wet: Option<f64>,
    pub soaking_dry: Option<f64>,
}

/// `site.json` in the site directory. Registry and policy paths are
/// relative to that directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub site_id: String,
    #[serde(default)]
    pub timezone: Option<String>,
    #[serde(default = "default_sensors")]
    pub sensor_registry: PathBuf,
    #[serde(default = "default_blocks")]
    pub block_registry: PathBuf,
    /// Index policy file. Absent means the built-in policy.
    #[serde(default)]
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub salt_thresholds: Option<SaltThresholds>,
    #[serde(default)]
    pub thresholds: ThresholdOverrides,
}

fn default_sensors() -> PathBuf {
    "sensors.json".into()
}

fn default_blocks() -> PathBuf {
    "blocks.json".into()
}

impl SiteConfig {
    pub fn new(site_id: impl Into<String>) -> Self {
        SiteConfig {
            site_id: site_id.into(),
            timezone: None,
            sensor_registry: default_sensors(),
            block_registry: default_blocks(),
            policy: None,
            salt_thresholds: None,
            thresholds: ThresholdOverrides::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Flag,
    Env,
    ConfigFile,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Flag => "flag",
            Source::Env => "env",
            Source::ConfigFile => "config",
            Source::Default => "default",
        })
    }
}

/// A resolved value and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting<T> {
    pub value: T,
    pub source: Source,
}

/// Applies the precedence order. `parse` turns the environment string into
/// a value.
pub fn resolve<T>(
    name: &str,
    flag: Option<T>,
    env: &dyn Fn(&str) -> Option<String>,
    file: Option<T>,
    default: T,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Setting<T>> {
    if let Some(value) = flag {
        return Ok(Setting { value, source: Source::Flag });
    }
    let key = format!("{ENV_PREFIX}{}", name.to_ascii_uppercase());
    if let Some(raw) = env(&key) {
        let value = parse(&raw).ok_or_else(|| Error::Config(format!("{key}={raw:?} cannot be parsed")))?;
        return Ok(Setting { value, source: Source::Env });
    }
    Ok(match file {
        Some(value) => Setting { value, source: Source::ConfigFile },
        None => Setting { value: default, source: Source::Default },
    })
}

/// Threshold values after precedence. Flags for these exist only on the
/// commands that use them.
#[derive(Debug, Clone, Default)]
pub struct ThresholdFlags {
    pub freeze_threshold: Option<f64>,
    pub freeze_hysteresis: Option<f64>,
    pub condensation_hysteresis: Option<f64>,
    pub rh_day_threshold: Option<f64>,
    pub soaking_wet: Option<f64>,
    pub soaking_dry: Option<f64>,
}

/// Fully resolved settings for one command run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub site_id: Setting<String>,
    pub timezone: Setting<Tz>,
    pub freeze_threshold: Setting<f64>,
    pub freeze_hysteresis: Setting<f64>,
    pub condensation_hysteresis: Setting<f64>,
    pub rh_day_threshold: Setting<f64>,
    pub soaking_wet: Setting<Option<f64>>,
    pub soaking_dry: Setting<Option<f64>>,
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl Resolved {
    pub fn new(
        site_flag: Option<String>,
        tz_flag: Option<Tz>,
        thresholds: &ThresholdFlags,
        file: Option<&SiteConfig>,
        env: &dyn Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let num = |s: &str| s.trim().parse::<f64>().ok();
        let opt_num = |s: &str| num(s).map(Some);
        let t = file.map(|c| &c.thresholds);
        let site_id = resolve("site", site_flag, env, file.map(|c| c.site_id.clone()), String::new(), |s| {
            Some(s.to_string())
        })?;
        if site_id.value.trim().is_empty() {
            return Err(Error::Config(
                "no site given: use --site, WEATHERMATRIX_SITE or --config".into(),
            ));
        }
        let file_tz = match file.and_then(|c| c.timezone.as_deref()) {
            Some(raw) => Some(
                raw.parse::<Tz>()
                    .map_err(|_| Error::Config(format!("unknown timezone {raw:?} in site config")))?,
            ),
            None => None,
        };
        let r = Resolved {
            site_id,
            timezone: resolve("timezone", tz_flag, env, file_tz, chrono_tz::UTC, |s| s.parse().ok())?,
            freeze_threshold: resolve(
                "freeze_threshold",
                thresholds.freeze_threshold,
                env,
                t.and_then(|t| t.freeze_threshold),
                crate::events::DEFAULT_FREEZE_THRESHOLD,
                num,
            )?,
            freeze_hysteresis: resolve(
                "freeze_hysteresis",
                thresholds.freeze_hysteresis,
                env,
                t.and_then(|t| t.freeze_hysteresis),
                crate::events::DEFAULT_FREEZE_HYSTERESIS,
                num,
            )?,
            condensation_hysteresis: resolve(
                "condensation_hysteresis",
                thresholds.condensation_hysteresis,
                env,
                t.and_then(|t| t.condensation_hysteresis),
                crate::events::DEFAULT_CONDENSATION_HYSTERESIS,
                num,
            )?,
            rh_day_threshold: resolve(
                "rh_day_threshold",
                thresholds.rh_day_threshold,
                env,
                t.and_then(|t| t.rh_day_threshold),
                90.0,
                num,
            )?,
            soaking_wet: resolve(
                "soaking_wet",
                thresholds.soaking_wet.map(Some),
                env,
                t.and_then(|t| t.soaking_wet).map(Some),
                None,
                opt_num,
            )?,
            soaking_dry: resolve(
                "soaking_dry",
                thresholds.soaking_dry.map(Some),
                env,
                t.and_then(|t| t.soaking_dry).map(Some),
                None,
                opt_num,
            )?,
        };
        check_range("freeze_threshold", r.freeze_threshold.value, -10.0, 10.0)?;
        check_range("freeze_hysteresis", r.freeze_hysteresis.value, 0.0, 5.0)?;
        check_range("condensation_hysteresis", r.condensation_hysteresis.value, 0.0, 5.0)?;
        check_range("rh_day_threshold", r.rh_day_threshold.value, 1.0, 100.0)?;
        r.soaking()?;
        Ok(r)
    }

    pub fn soaking(&self) -> Result<Option<SoakingThresholds>> {
        match (self.soaking_wet.value, self.soaking_dry.value) {
            (None, None) => Ok(None),
            (wet, dry) => SoakingThresholds::new(wet, dry)
                .map(Some)
                .map_err(|e| Error::Config(format!("soaking thresholds: {e}"))),
        }
    }

    pub fn climate_options(&self, period: Period) -> Result<ClimateOptions> {
        let mut o = ClimateOptions::new(period, self.timezone.value);
        o.freeze_threshold = self.freeze_threshold.value;
        o.freeze_hysteresis = self.freeze_hysteresis.value;
        o.condensation_hysteresis = self.condensation_hysteresis.value;
        o.rh_day_threshold = self.rh_day_threshold.value;
        o.soaking = self.soaking()?;
        Ok(o)
    }

    /// `name = value (source)` lines for `--verbose`.
    pub fn echo(&self) -> Vec<String> {
        fn line<T: fmt::Debug>(name: &str, s: &Setting<T>) -> String {
            format!("{name} = {:?} ({})", s.value, s.source)
        }
        vec![
            line("site", &self.site_id),
            format!("timezone = {} ({})", self.timezone.value, self.timezone.source),
            line("freeze_threshold", &self.freeze_threshold),
            line("freeze_hysteresis", &self.freeze_hysteresis),
            line("condensation_hysteresis", &self.condensation_hysteresis),
            line("rh_day_threshold", &self.rh_day_threshold),
            line("soaking_wet", &self.soaking_wet),
            line("soaking_dry", &self.soaking_dry),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(vars: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = vars.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn precedence_order() {
        let mut cfg = SiteConfig::new("from-file");
        cfg.timezone = Some("Europe/Paris".into());
        cfg.thresholds.condensation_hysteresis = Some(0.5);
        let e = env(&[("WEATHERMATRIX_CONDENSATION_HYSTERESIS", "0.3"), ("WEATHERMATRIX_SITE", "from-env")]);
        let flags = ThresholdFlags {
            condensation_hysteresis: Some(0.1),
            ..Default::default()
        };
        let r = Resolved::new(None, None, &flags, Some(&cfg), &e).unwrap();
        assert_eq!(r.condensation_hysteresis, Setting { value: 0.1, source: Source::Flag });
        assert_eq!(r.site_id.value, "from-env");
        assert_eq!(r.timezone.source, Source::ConfigFile);
        assert_eq!(r.freeze_threshold.source, Source::Default);

        let r = Resolved::new(Some("flag".into()), None, &ThresholdFlags::default(), Some(&cfg), &e).unwrap();
        assert_eq!(r.condensation_hysteresis, Setting { value: 0.3, source: Source::Env });
        assert_eq!(r.site_id.source, Source::Flag);
        let r = Resolved::new(None, None, &ThresholdFlags::default(), Some(&cfg), &env(&[])).unwrap();
        assert_eq!(r.condensation_hysteresis.value, 0.5);
        assert!(r.echo().iter().any(|l| l == "condensation_hysteresis = 0.5 (config)"));
    }

    #[test]
    fn rejects_insane_values() {
        let e = env(&[("WEATHERMATRIX_FREEZE_HYSTERESIS", "abc")]);
        assert!(matches!(
            Resolved::new(Some("s".into()), None, &ThresholdFlags::default(), None, &e),
            Err(Error::Config(_))
        ));
        let flags = ThresholdFlags {
            rh_day_threshold: Some(140.0),
            ..Default::default()
        };
        assert!(Resolved::new(Some("s".into()), None, &flags, None, &env(&[])).is_err());
        let flags = ThresholdFlags {
            soaking_wet: Some(5.0),
            soaking_dry: Some(8.0),
            ..Default::default()
        };
        assert!(Resolved::new(Some("s".into()), None, &flags, None, &env(&[])).is_err());
        assert!(Resolved::new(None, None, &ThresholdFlags::default(), None, &env(&[])).is_err());
    }
}
