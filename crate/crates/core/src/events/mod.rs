//! Climate statistics and event counts over ingested series.

pub mod correlation;
pub mod cycles;
pub mod days;
pub mod dewpoint;
pub mod report;
pub mod summary;

pub use correlation::{crack_climate_correlation, strongest_lag, LagCorrelation};
pub use cycles::{
    condensation_from_margins, count_freeze_thaw_cycles, count_soaking_drying_cycles,
    detect_condensation_events, detect_condensation_events_with, two_threshold_cycles,
    CondensationEvent, CondensationReport, Cycle, CycleCount, CycleKind, SoakingThresholds,
    DEFAULT_CONDENSATION_HYSTERESIS, DEFAULT_FREEZE_HYSTERESIS, DEFAULT_FREEZE_THRESHOLD,
};
pub use days::{count_threshold_days, DayCount, Direction};
pub use report::{condensation_rows, cycle_rows, render_svg, write_events_csv, EventRow};
pub use dewpoint::{dew_point, dew_point_with, MagnusCoefficients};
pub use summary::{compare_faces, period_summary, ChannelStats, FaceClimate, FaceComparison, PeriodSummary};
