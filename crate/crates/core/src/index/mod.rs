//! Weathering index: coverage ratings, per-family sub-indices, the
//! structural index and the general index `i`.
//!
//! The policy file fixes the rating scale, structural scores, weights and
//! averaging mode; its hash is stamped into every [`WeatheringIndex`].

mod policy;
mod scale;
mod structural;
mod weathering;

pub use policy::{AveragingMode, ComponentWeights, IndexPolicy, MeasurementExtension, POLICY_SCHEMA_VERSION};
pub use scale::{rating_from_coverage, RatingBand, RatingScale};
pub use structural::{structural_index, HeightBand, StructuralScore, StructuralWeights};
pub use weathering::{
    campaign_indices, family_subindex, sub_indices, weathering_index, Component, SubIndexSet, WeatheringIndex,
};
