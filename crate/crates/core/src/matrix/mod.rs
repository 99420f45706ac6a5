//! Per-block alteration matrix: build, CSV/JSON export and import, diff
//! between campaigns, and a version manifest.

mod build;
mod diff;
mod io;
mod manifest;
mod schema;
mod table;

pub use build::{build_matrix, sensor_block_map, MatrixInputs};
pub use diff::{diff_matrices, BlockDiff, CellDelta, MatrixDiff, TextChange};
pub use io::{export, export_csv, export_json, import_csv, import_json, CsvSidecar, MatrixFormat};
pub use manifest::{ManifestEntry, VersionManifest};
pub use schema::{ColumnDef, ColumnKind, MatrixSchema, ValueType, ION_COLUMNS, MATRIX_SCHEMA_VERSION};
pub use table::{AlterationMatrix, Cell, MatrixMeta};
