//! Sensor registry, log parsing, gap detection and grid alignment.

pub mod align;
pub mod parse;
pub mod sensor;
pub mod series;

pub use align::{align_series, align_series_with, AlignOptions, AlignedFrame, Grid, GridSeries};
pub use parse::{parse_sensor_csv, write_series_csv, ParseOptions, ParsedLog, RejectedRow};
pub use sensor::{ChannelSpec, Face, Quantity, SensorKind, SensorRegistry, SensorSpec};
pub use series::{detect_gaps, Gap, Quality, Reading, TimeSeries, DEFAULT_GAP_FACTOR};
