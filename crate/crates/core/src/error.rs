use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty file")]
    EmptyFile,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-monotonic timestamp at row {row}: {timestamp}")]
    NonMonotonicTimestamps { row: usize, timestamp: String },
    #[error("invalid sensor specification: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("incompatible units for {quantity}: {first} vs {second}")]
    IncompatibleUnits {
        quantity: String,
        first: String,
        second: String,
    },
    #[error("outside the valid domain: {0}")]
    Domain(String),
    #[error("series are not aligned on a common grid")]
    MisalignedInput,
    #[error("no usable data: {0}")]
    NoData(String),
    #[error("no overlapping timestamps between the compared series")]
    NoOverlap,
    #[error("insufficient overlap at lag {lag_minutes} min: {n} pairs (need at least 3)")]
    InsufficientOverlap { lag_minutes: i64, n: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing measurement: {0}")]
    MissingMeasurement(String),
    #[error("overlapping depth intervals in drilling {0}")]
    OverlappingIntervals(String),
    #[error("no index components available for block {0}")]
    NoComponents(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("campaign {campaign_id} has {findings} validation finding(s)")]
    UnvalidatedCampaign { campaign_id: String, findings: usize },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("site mismatch: {0} vs {1}")]
    SiteMismatch(String, String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
