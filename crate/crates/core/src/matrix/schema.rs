use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assessment::Family;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Structural,
    Alteration,
    Measurement,
    Lab,
    Climate,
    Index,
}

impl ColumnKind {
    /// Columns filled from the campaign rather than the registry or sensors.
    pub fn from_campaign(self) -> bool {
        matches!(self, ColumnKind::Alteration | ColumnKind::Measurement | ColumnKind::Lab | ColumnKind::Index)
    }

    /// Columns holding values on the 0–5 rating scale.
    pub fn bounded_0_5(self) -> bool {
        matches!(self, ColumnKind::Alteration | ColumnKind::Index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Numeric,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
    pub value_type: ValueType,
    /// Producing module and the parameters that matter.
    pub provenance: String,
}

pub const MATRIX_SCHEMA_VERSION: u32 = 1;

/// Ordered column list. The first column is always `block_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSchema {
    pub version: u32,
    pub columns: Vec<ColumnDef>,
}

fn col(name: impl Into<String>, kind: ColumnKind, unit: &str, value_type: ValueType, provenance: &str) -> ColumnDef {
    ColumnDef {
        name: name.into(),
        kind,
        unit: unit.into(),
        value_type,
        provenance: provenance.into(),
    }
}

pub const ION_COLUMNS: [&str; 6] = ["chloride", "nitrate", "sulfate", "sodium", "magnesium", "calcium"];

impl Default for MatrixSchema {
    /// 46 columns: structural attributes, family ratings and indices,
    /// in-situ measurements, salt lab results and climate aggregates.
    fn default() -> Self {
        use ColumnKind::*;
        use ValueType::*;
        let mut c = vec![
            col("block_id", Structural, "", Text, "block registry"),
            col("face", Structural, "", Text, "block registry"),
            col("height_band_m", Structural, "m", Numeric, "block registry"),
            col("material", Structural, "", Text, "block registry"),
            col("kind", Structural, "", Text, "block registry"),
            col("configuration", Structural, "", Text, "block registry"),
            col("i_structure", Index, "0-5", Numeric, "index: structural weights"),
        ];
        for f in Family::ALL {
            c.push(col(f.label(), Alteration, "0-5", Numeric, "index: cap-and-sum coverage rating"));
        }
        c.push(col("i_alteration", Index, "0-5", Numeric, "index: mean of family ratings"));
        c.push(col("i", Index, "0-5", Numeric, "index: general weathering index"));
        c.push(col("color_l", Measurement, "L*", Numeric, "campaign: colorimetry mean"));
        c.push(col("color_a", Measurement, "a*", Numeric, "campaign: colorimetry mean"));
        c.push(col("color_b", Measurement, "b*", Numeric, "campaign: colorimetry mean"));
        c.push(col("delta_e_prev", Measurement, "dE76", Numeric, "assessment: CIE76 vs previous campaign"));
        c.push(col("surface_humidity", Measurement, "instrument", Numeric, "campaign: capacitive meter mean"));
        for ion in ION_COLUMNS {
            c.push(col(format!("{ion}_pct"), Lab, "mass %", Numeric, "campaign: max over drilling depths"));
        }
        c.push(col("w_pct", Lab, "mass %", Numeric, "campaign: max over drilling depths"));
        c.push(col("w_h_pct", Lab, "mass %", Numeric, "campaign: max over drilling depths"));
        for ion in ["chloride", "nitrate", "sulfate"] {
            c.push(col(format!("{ion}_flag"), Lab, "0/1", Numeric, "assessment: any depth above threshold"));
        }
        c.push(col("hygroscopic_salt_suspected", Lab, "0/1", Numeric, "assessment: any depth suspected"));
        for (q, unit) in [("t", "°C"), ("ts", "°C"), ("rh", "%")] {
            for stat in ["avg", "min", "max"] {
                c.push(col(format!("{stat}_{q}"), Climate, unit, Numeric, "events: lookback window"));
            }
        }
        c.push(col("condensation_events", Climate, "count", Numeric, "events: Ts <= Td onsets"));
        c.push(col("condensation_samples", Climate, "count", Numeric, "events: samples Ts <= Td"));
        c.push(col("freeze_thaw_cycles", Climate, "count", Numeric, "events: air temperature"));
        c.push(col("rh90_days", Climate, "days", Numeric, "events: local days with RH > 90 %"));
        c.push(col("rh_evaluable_days", Climate, "days", Numeric, "events: local days with data"));
        c.push(col("soaking_drying_cycles", Climate, "count", Numeric, "events: TDR water content"));
        MatrixSchema {
            version: MATRIX_SCHEMA_VERSION,
            columns: c,
        }
    }
}

impl MatrixSchema {
    pub fn validate(&self) -> Result<()> {
        let first = self.columns.first().map(|c| c.name.as_str());
        if first != Some("block_id") {
            return Err(Error::SchemaViolation("first column must be block_id".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if c.name.trim().is_empty() || !seen.insert(c.name.as_str()) {
                return Err(Error::SchemaViolation(format!("column name {:?} empty or repeated", c.name)));
            }
        }
        Ok(())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_shape() {
        let s = MatrixSchema::default();
        s.validate().unwrap();
        assert_eq!(s.len(), 46);
        assert_eq!(s.position("i"), Some(13));
        for kind in [ColumnKind::Structural, ColumnKind::Alteration, ColumnKind::Measurement, ColumnKind::Lab, ColumnKind::Climate, ColumnKind::Index] {
            assert!(s.columns.iter().any(|c| c.kind == kind));
        }
        let mut dup = s.clone();
        dup.columns.push(dup.columns[3].clone());
        assert!(dup.validate().is_err());
        let mut moved = s;
        moved.columns.swap(0, 1);
        assert!(moved.validate().is_err());
    }
}
