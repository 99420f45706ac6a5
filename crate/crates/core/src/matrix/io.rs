//! Matrix CSV and JSON formats.
//!
//! CSV: UTF-8, comma, LF, header = column names in schema order, missing
//! cells as empty fields, numbers in shortest round-trip form. Decimal
//! commas are accepted on import only. A CSV file carries no metadata, so
//! importing one needs the schema and meta from elsewhere (the JSON
//! sidecar written next to it).
//!
//! JSON: `{meta, schema, rows}` with `null` for missing cells.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{MatrixSchema, ValueType};
use super::table::{AlterationMatrix, Cell, MatrixMeta};
use crate::time::parse_decimal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other}, expected csv or json"))),
        }
    }
}

pub fn export_csv(matrix: &AlterationMatrix) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(matrix.schema.names()).expect("in-memory write");
    for cells in matrix.rows.values() {
        let fields = cells.iter().map(|c| match c {
            Cell::Number(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        });
        w.write_record(fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn export_json(matrix: &AlterationMatrix) -> String {
    let mut s = serde_json::to_string_pretty(matrix).expect("matrix serialises");
    s.push('\n');
    s
}

pub fn export(matrix: &AlterationMatrix, format: MatrixFormat) -> String {
    match format {
        MatrixFormat::Csv => export_csv(matrix),
        MatrixFormat::Json => export_json(matrix),
    }
}

/// Schema and meta without rows: what a CSV export needs beside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSidecar {
    pub meta: MatrixMeta,
    pub schema: MatrixSchema,
}

impl CsvSidecar {
    pub fn of(matrix: &AlterationMatrix) -> Self {
        CsvSidecar {
            meta: matrix.meta.clone(),
            schema: matrix.schema.clone(),
        }
    }
}

fn malformed(e: impl std::fmt::Display) -> Error {
    Error::MalformedPayload(e.to_string())
}

pub fn import_csv(raw: &str, schema: &MatrixSchema, meta: MatrixMeta) -> Result<AlterationMatrix> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    if raw.trim().is_empty() {
        return Err(Error::MalformedPayload("empty matrix file".into()));
    }
    if !raw.ends_with('\n') {
        return Err(Error::MalformedPayload("matrix CSV does not end with a newline; truncated?".into()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw.as_bytes());
    let header: Vec<String> = reader.headers().map_err(malformed)?.iter().map(str::to_string).collect();
    let expected: Vec<&str> = schema.names().collect();
    if header != expected {
        return Err(Error::SchemaViolation(format!(
            "header has {} columns that do not match the {}-column schema",
            header.len(),
            expected.len()
        )));
    }
    let mut rows = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        let line = record.position().map_or(0, |p| p.line());
        let cells = record
            .iter()
            .zip(&schema.columns)
            .map(|(field, col)| match (field, col.value_type) {
                ("", _) => Ok(Cell::Missing),
                (s, ValueType::Text) => Ok(Cell::Text(s.to_string())),
                (s, ValueType::Numeric) => parse_decimal(s)
                    .map(Cell::Number)
                    .ok_or_else(|| Error::MalformedPayload(format!("line {line}, {}: not a number: {s:?}", col.name))),
            })
            .collect::<Result<Vec<_>>>()?;
        let id = cells
            .first()
            .and_then(Cell::as_str)
            .ok_or_else(|| Error::MalformedPayload(format!("line {line}: empty block_id")))?
            .to_string();
        if rows.insert(id.clone(), cells).is_some() {
            return Err(Error::SchemaViolation(format!("block {id} appears twice")));
        }
    }
    let m = AlterationMatrix {
        meta,
        schema: schema.clone(),
        rows,
    };
    m.validate()?;
    Ok(m)
}

pub fn import_json(raw: &str) -> Result<AlterationMatrix> {
    let m: AlterationMatrix = serde_json::from_str(raw).map_err(malformed)?;
    m.validate()?;
    Ok(m)
}
