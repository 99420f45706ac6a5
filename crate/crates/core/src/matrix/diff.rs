use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::schema::ValueType;
use super::table::AlterationMatrix;
use crate::{Error, Result};

/// A shared numeric cell. `delta = newer − older` when both are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub column: String,
    pub older: Option<f64>,
    pub newer: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextChange {
    pub column: String,
    pub older: Option<String>,
    pub newer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiff {
    pub block_id: String,
    pub delta_i: Option<f64>,
    pub numeric: Vec<CellDelta>,
    pub text_changes: Vec<TextChange>,
}

impl BlockDiff {
    pub fn is_zero(&self) -> bool {
        self.text_changes.is_empty()
            && self
                .numeric
                .iter()
                .all(|d| d.delta == Some(0.0) || (d.older.is_none() && d.newer.is_none()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiff {
    pub site_id: String,
    pub older_campaign: String,
    pub newer_campaign: String,
    /// Blocks present in both, sorted by id.
    pub blocks: Vec<BlockDiff>,
    pub added_blocks: Vec<String>,
    pub removed_blocks: Vec<String>,
    pub added_columns: Vec<String>,
    pub removed_columns: Vec<String>,
}

impl MatrixDiff {
    pub fn is_zero(&self) -> bool {
        self.added_blocks.is_empty()
            && self.removed_blocks.is_empty()
            && self.added_columns.is_empty()
            && self.removed_columns.is_empty()
            && self.blocks.iter().all(BlockDiff::is_zero)
    }

    /// Blocks whose `i` changed, with the change.
    pub fn nonzero_delta_i(&self) -> Vec<(&str, f64)> {
        self.blocks
            .iter()
            .filter_map(|b| b.delta_i.filter(|d| *d != 0.0).map(|d| (b.block_id.as_str(), d)))
            .collect()
    }

    /// Plain-text per-block Δi table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "site {}: {} -> {}\n{:<12} {:>8} {:>8} {:>8}\n",
            self.site_id, self.older_campaign, self.newer_campaign, "block", "i_old", "i_new", "delta_i"
        );
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        for b in &self.blocks {
            let i = b.numeric.iter().find(|d| d.column == "i");
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>8}",
                b.block_id,
                fmt(i.and_then(|d| d.older)),
                fmt(i.and_then(|d| d.newer)),
                b.delta_i.map_or_else(|| "-".to_string(), |d| format!("{d:+.3}")),
            );
        }
        for (label, list) in [
            ("added blocks", &self.added_blocks),
            ("removed blocks", &self.removed_blocks),
            ("added columns", &self.added_columns),
            ("removed columns", &self.removed_columns),
        ] {
            if !list.is_empty() {
                let _ = writeln!(out, "{label}: {}", list.join(", "));
            }
        }
        out
    }
}

pub fn diff_matrices(older: &AlterationMatrix, newer: &AlterationMatrix) -> Result<MatrixDiff> {
    if older.meta.site_id != newer.meta.site_id {
        return Err(Error::SiteMismatch(older.meta.site_id.clone(), newer.meta.site_id.clone()));
    }
    let old_cols: BTreeSet<&str> = older.schema.names().collect();
    let new_cols: BTreeSet<&str> = newer.schema.names().collect();
    let to_vec = |s: BTreeSet<&&str>| s.into_iter().map(|c| c.to_string()).collect::<Vec<_>>();
    let added_columns = to_vec(new_cols.difference(&old_cols).collect());
    let removed_columns = to_vec(old_cols.difference(&new_cols).collect());

    // shared columns in the newer schema's order
    let shared: Vec<(usize, usize, &str, ValueType)> = newer
        .schema
        .columns
        .iter()
        .enumerate()
        .filter_map(|(j, c)| {
            let i = older.schema.position(&c.name)?;
            (older.schema.columns[i].value_type == c.value_type).then_some((i, j, c.name.as_str(), c.value_type))
        })
        .filter(|(_, _, name, _)| *name != "block_id")
        .collect();

    let mut blocks = Vec::new();
    for (id, new_row) in &newer.rows {
        let Some(old_row) = older.rows.get(id) else { continue };
        let mut numeric = Vec::new();
        let mut text_changes = Vec::new();
        for &(i, j, name, vt) in &shared {
            match vt {
                ValueType::Numeric => {
                    let (o, n) = (old_row[i].as_f64(), new_row[j].as_f64());
                    numeric.push(CellDelta {
                        column: name.to_string(),
                        older: o,
                        newer: n,
                        delta: o.zip(n).map(|(o, n)| n - o),
                    });
                }
                ValueType::Text => {
                    let (o, n) = (old_row[i].as_str(), new_row[j].as_str());
                    if o != n {
                        text_changes.push(TextChange {
                            column: name.to_string(),
                            older: o.map(str::to_string),
                            newer: n.map(str::to_string),
                        });
                    }
                }
            }
        }
        let delta_i = numeric.iter().find(|d| d.column == "i").and_then(|d| d.delta);
        blocks.push(BlockDiff {
            block_id: id.clone(),
            delta_i,
            numeric,
            text_changes,
        });
    }
    Ok(MatrixDiff {
        site_id: newer.meta.site_id.clone(),
        older_campaign: older.meta.campaign_id.clone(),
        newer_campaign: newer.meta.campaign_id.clone(),
        blocks,
        added_blocks: newer.rows.keys().filter(|k| !older.rows.contains_key(*k)).cloned().collect(),
        removed_blocks: older.rows.keys().filter(|k| !newer.rows.contains_key(*k)).cloned().collect(),
        added_columns,
        removed_columns,
    })
}
