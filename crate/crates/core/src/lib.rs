//! # weathermatrix
//!
//! Turns heritage-monument monitoring data into numbers a predictive model
//! can consume: continuous microclimate sensor logs become climate statistics
//! and event counts, periodic damage-assessment campaigns become per-block
//! weathering indices, and both are joined into a versioned alteration matrix
//! with one row per masonry block.
//!
//! The pipeline, bottom-up:
//!
//! | module         | what it does                                                        |
//! |----------------|---------------------------------------------------------------------|
//! | [`ingest`]     | sensor registry, CSV parsing, gap detection, grid alignment          |
//! | [`events`]     | dew point, condensation events, cycle counters, period summaries     |
//! | [`assessment`] | blocks, campaigns, salt contamination, colorimetry, depth profiles   |
//! | [`index`]      | coverage rating scale, structural index, general weathering index    |
//! | [`matrix`]     | matrix schema, build, CSV/JSON export and import, version diffs      |
//! | [`pipeline`]   | per-sensor climate aggregates over a lookback window                 |
//! | [`cli`]        | the `weathermatrix` command and its on-disk artifact store           |
//! | [`fixtures`]   | seeded Strasbourg registry, campaigns and synthetic sensor logs      |
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory (`cargo run -p weathermatrix --example <name>`).

pub mod assessment;
pub mod cli;
pub mod error;
pub mod events;
pub mod fixtures;
pub mod index;
pub mod ingest;
pub mod matrix;
pub mod pipeline;
pub mod time;

pub use error::{Error, Result};
