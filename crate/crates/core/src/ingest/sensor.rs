//! Sensor registry: which instruments exist on a site, what they measure,
//! at what cadence, and which masonry blocks they describe.

use std::collections::BTreeSet;
use std::fmt;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical quantity carried by one sensor channel. Each has a fixed
/// canonical unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    AirTemp,
    RelHumidity,
    SurfaceTemp,
    WaterContent,
    CrackWidth,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::AirTemp,
        Quantity::RelHumidity,
        Quantity::SurfaceTemp,
        Quantity::WaterContent,
        Quantity::CrackWidth,
    ];

    /// Column label used in sensor CSV headers.
    pub fn label(self) -> &'static str {
        match self {
            Quantity::AirTemp => "air_temp",
            Quantity::RelHumidity => "rel_humidity",
            Quantity::SurfaceTemp => "surface_temp",
            Quantity::WaterContent => "water_content",
            Quantity::CrackWidth => "crack_width",
        }
    }

    pub fn from_label(label: &str) -> Option<Quantity> {
        Quantity::ALL.into_iter().find(|q| q.label() == label)
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::AirTemp | Quantity::SurfaceTemp => "°C",
            Quantity::RelHumidity | Quantity::WaterContent => "%",
            Quantity::CrackWidth => "mm",
        }
    }

    pub fn default_range(self) -> [f64; 2] {
        match self {
            Quantity::AirTemp => [-40.0, 60.0],
            Quantity::SurfaceTemp => [-40.0, 80.0],
            Quantity::RelHumidity | Quantity::WaterContent => [0.0, 100.0],
            Quantity::CrackWidth => [0.0, 50.0],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    ThermoHygrometer,
    SurfaceProbe,
    TdrMoisture,
    Fissurometer,
}

impl SensorKind {
    pub fn permitted(self) -> &'static [Quantity] {
        match self {
            SensorKind::ThermoHygrometer => &[Quantity::AirTemp, Quantity::RelHumidity],
            SensorKind::SurfaceProbe => &[Quantity::SurfaceTemp],
            SensorKind::TdrMoisture => &[Quantity::WaterContent],
            SensorKind::Fissurometer => &[
                Quantity::CrackWidth,
                Quantity::AirTemp,
                Quantity::RelHumidity,
            ],
        }
    }

    /// Instrument resolution for a channel of this sensor kind.
    pub fn default_resolution(self, quantity: Quantity) -> f64 {
        match (self, quantity) {
            (SensorKind::ThermoHygrometer, Quantity::RelHumidity) => 1.5,
            (SensorKind::Fissurometer, Quantity::RelHumidity) => 1.0,
            (_, Quantity::WaterContent) => 1.0,
            _ => 0.1,
        }
    }

    /// Logging cadence in minutes. TDR probes log to an SD card at a
    /// cadence that has to be configured per installation.
    pub fn default_interval_minutes(self) -> Option<u32> {
        match self {
            SensorKind::ThermoHygrometer | SensorKind::SurfaceProbe => Some(20),
            SensorKind::Fissurometer => Some(60),
            SensorKind::TdrMoisture => None,
        }
    }
}

/// Monument face. The two monitored faces are named after their
/// orientation; other sites use `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "NE")]
    Ne,
    #[serde(rename = "SW")]
    Sw,
    #[serde(rename = "other")]
    Other,
}

impl Face {
    pub fn label(self) -> &'static str {
        match self {
            Face::Ne => "NE",
            Face::Sw => "SW",
            Face::Other => "other",
        }
    }

    pub fn parse(raw: &str) -> Option<Face> {
        match raw.trim() {
            "NE" | "ne" => Some(Face::Ne),
            "SW" | "sw" => Some(Face::Sw),
            "other" => Some(Face::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    pub quantity: Quantity,
    pub unit: String,
    pub resolution: f64,
    pub valid_range: [f64; 2],
}

impl ChannelSpec {
    pub fn for_kind(kind: SensorKind, quantity: Quantity) -> Self {
        ChannelSpec {
            quantity,
            unit: quantity.unit().to_string(),
            resolution: kind.default_resolution(quantity),
            valid_range: quantity.default_range(),
        }
    }

    pub fn in_range(&self, value: f64) -> bool {
        self.valid_range[0] <= value && value <= self.valid_range[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSensor")]
pub struct SensorSpec {
    pub sensor_id: String,
    pub kind: SensorKind,
    pub channels: Vec<ChannelSpec>,
    pub expected_interval_minutes: u32,
    pub face: Face,
    #[serde(default)]
    pub position: String,
    #[serde(default)]
    pub associated_block_ids: Vec<String>,
}

impl SensorSpec {
    /// A sensor carrying every channel its kind permits, with default
    /// ranges and resolutions.
    pub fn with_defaults(
        sensor_id: impl Into<String>,
        kind: SensorKind,
        face: Face,
        expected_interval_minutes: u32,
    ) -> Result<Self> {
        let spec = SensorSpec {
            sensor_id: sensor_id.into(),
            kind,
            channels: kind
                .permitted()
                .iter()
                .map(|&q| ChannelSpec::for_kind(kind, q))
                .collect(),
            expected_interval_minutes,
            face,
            position: String::new(),
            associated_block_ids: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(format!("{}: {msg}", self.sensor_id)));
        if self.sensor_id.trim().is_empty() {
            return fail("empty sensor_id".into());
        }
        if self.expected_interval_minutes == 0 {
            return fail("expected_interval must be positive".into());
        }
        if self.channels.is_empty() {
            return fail("no channels declared".into());
        }
        let mut seen = BTreeSet::new();
        for ch in &self.channels {
            if !self.kind.permitted().contains(&ch.quantity) {
                return fail(format!("{:?} cannot carry {}", self.kind, ch.quantity));
            }
            if !seen.insert(ch.quantity) {
                return fail(format!("channel {} declared twice", ch.quantity));
            }
            if !(ch.resolution > 0.0) {
                return fail(format!("{}: resolution must be positive", ch.quantity));
            }
            if !(ch.valid_range[0] < ch.valid_range[1]) {
                return fail(format!("{}: valid_range min must be < max", ch.quantity));
            }
        }
        Ok(())
    }

    pub fn expected_interval(&self) -> Duration {
        Duration::minutes(i64::from(self.expected_interval_minutes))
    }

    pub fn channel(&self, quantity: Quantity) -> Option<&ChannelSpec> {
        self.channels.iter().find(|c| c.quantity == quantity)
    }

    /// Copy of this spec restricted to the given channels.
    pub fn restricted_to(&self, quantities: &[Quantity]) -> SensorSpec {
        SensorSpec {
            channels: self
                .channels
                .iter()
                .filter(|c| quantities.contains(&c.quantity))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Deserialize)]
struct RawChannel {
    quantity: Quantity,
    unit: Option<String>,
    resolution: Option<f64>,
    valid_range: Option<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawSensor {
    sensor_id: String,
    kind: SensorKind,
    channels: Option<Vec<RawChannel>>,
    expected_interval_minutes: Option<u32>,
    face: Face,
    #[serde(default)]
    position: String,
    #[serde(default)]
    associated_block_ids: Vec<String>,
}

impl TryFrom<RawSensor> for SensorSpec {
    type Error = Error;

    fn try_from(raw: RawSensor) -> Result<Self> {
        let kind = raw.kind;
        let channels = match raw.channels {
            None => kind
                .permitted()
                .iter()
                .map(|&q| ChannelSpec::for_kind(kind, q))
                .collect(),
            Some(chs) => chs
                .into_iter()
                .map(|c| {
                    let default = ChannelSpec::for_kind(kind, c.quantity);
                    ChannelSpec {
                        quantity: c.quantity,
                        unit: c.unit.unwrap_or(default.unit),
                        resolution: c.resolution.unwrap_or(default.resolution),
                        valid_range: c.valid_range.unwrap_or(default.valid_range),
                    }
                })
                .collect(),
        };
        let expected_interval_minutes = raw
            .expected_interval_minutes
            .or(kind.default_interval_minutes())
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "{}: expected_interval_minutes is required for {:?} sensors",
                    raw.sensor_id, kind
                ))
            })?;
        let spec = SensorSpec {
            sensor_id: raw.sensor_id,
            kind,
            channels,
            expected_interval_minutes,
            face: raw.face,
            position: raw.position,
            associated_block_ids: raw.associated_block_ids,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub const SENSOR_REGISTRY_SCHEMA_VERSION: u32 = 1;

/// Per-site sensor registry file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRegistry {
    pub schema_version: u32,
    pub site_id: String,
    pub sensors: Vec<SensorSpec>,
}

impl SensorRegistry {
    pub fn new(site_id: impl Into<String>, sensors: Vec<SensorSpec>) -> Result<Self> {
        let reg = SensorRegistry {
            schema_version: SENSOR_REGISTRY_SCHEMA_VERSION,
            site_id: site_id.into(),
            sensors,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let reg: SensorRegistry = serde_json::from_str(raw)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SENSOR_REGISTRY_SCHEMA_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported sensor registry schema_version {}",
                self.schema_version
            )));
        }
        let mut ids = BTreeSet::new();
        for s in &self.sensors {
            s.validate()?;
            if !ids.insert(s.sensor_id.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate sensor_id {}",
                    s.sensor_id
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, sensor_id: &str) -> Option<&SensorSpec> {
        self.sensors.iter().find(|s| s.sensor_id == sensor_id)
    }

    /// The registered sensor a log file belongs to: its stem must equal the
    /// sensor id or start with `<sensor_id>_`. Longest match wins.
    pub fn match_file_stem(&self, stem: &str) -> Option<&SensorSpec> {
        self.sensors
            .iter()
            .filter(|s| {
                stem == s.sensor_id
                    || stem
                        .strip_prefix(s.sensor_id.as_str())
                        .is_some_and(|rest| rest.starts_with('_'))
            })
            .max_by_key(|s| s.sensor_id.len())
    }
}
