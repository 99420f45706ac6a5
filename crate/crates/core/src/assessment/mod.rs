//! Field and laboratory campaigns: block registry, alteration records,
//! surface measurements and salt analyses.

mod block;
mod campaign;
mod color;
mod profile;
mod salt;

pub use block::{Block, BlockKind, BlockRegistry, Material, BLOCK_REGISTRY_SCHEMA_VERSION};
pub use campaign::{
    validate_campaign, AlterationRecord, BlockRef, Campaign, Family, Finding, SurfaceMeasurement, ValidatedCampaign,
    ValidationReport, CAMPAIGN_SCHEMA_VERSION,
};
pub use color::{colorimetry_delta, Lab};
pub use profile::{depth_profile, DepthProfile, MoistureOrigin};
pub use salt::{assess_salt_contamination, ContaminationFlags, IonFlag, SaltAnalysis, SaltThresholds, Verdict};
