use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::schema::{MatrixSchema, ValueType};
use crate::time::Period;
use crate::{Error, Result};

/// One matrix cell. Missing is kept apart from zero all the way to export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn number(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, Cell::Number)
    }

    pub fn count(v: Option<usize>) -> Cell {
        v.map_or(Cell::Missing, |n| Cell::Number(n as f64))
    }

    pub fn flag(v: Option<bool>) -> Cell {
        v.map_or(Cell::Missing, |b| Cell::Number(if b { 1.0 } else { 0.0 }))
    }

    pub fn text(v: impl Into<String>) -> Cell {
        let s = v.into();
        if s.is_empty() {
            Cell::Missing
        } else {
            Cell::Text(s)
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub site_id: String,
    pub campaign_id: String,
    /// The campaign date. Used instead of a wall-clock creation time so a
    /// rebuild from the same inputs is byte-identical.
    pub as_of: NaiveDate,
    pub policy_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback: Option<Period>,
    /// Build parameters echoed for traceability (thresholds, hysteresis).
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
}

/// One row per block, keyed and sorted by block id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlterationMatrix {
    pub meta: MatrixMeta,
    pub schema: MatrixSchema,
    pub rows: BTreeMap<String, Vec<Cell>>,
}

impl AlterationMatrix {
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let fail = |m: String| Err(Error::SchemaViolation(m));
        for (id, cells) in &self.rows {
            if cells.len() != self.schema.len() {
                return fail(format!("row {id}: {} cells for {} columns", cells.len(), self.schema.len()));
            }
            if cells[0].as_str() != Some(id.as_str()) {
                return fail(format!("row {id}: block_id cell does not match the row key"));
            }
            for (cell, col) in cells.iter().zip(&self.schema.columns) {
                match (cell, col.value_type) {
                    (Cell::Missing, _) => {}
                    (Cell::Number(v), ValueType::Numeric) => {
                        if !v.is_finite() {
                            return fail(format!("row {id}, {}: non-finite value", col.name));
                        }
                        if col.kind.bounded_0_5() && !(0.0..=5.0).contains(v) {
                            return fail(format!("row {id}, {}: {v} outside [0, 5]", col.name));
                        }
                    }
                    (Cell::Text(s), ValueType::Text) if !s.is_empty() => {}
                    _ => return fail(format!("row {id}, {}: cell does not match column type", col.name)),
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, block_id: &str, column: &str) -> Option<&Cell> {
        let i = self.schema.position(column)?;
        self.rows.get(block_id).map(|r| &r[i])
    }

    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = (&str, &Cell)>> {
        let i = self.schema.position(name)?;
        Some(self.rows.iter().map(move |(k, r)| (k.as_str(), &r[i])))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.schema.len()
    }

    /// SHA-256 of the JSON export, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(super::io::export_json(self).as_bytes()))
    }
}
