use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid party count {n}: {reason}")]
    PartyCount { n: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected} parties, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid correlator: {0}")]
    InvalidCorrelator(String),

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("no saturating vertex at bound {bound}")]
    NoSaturatingVertex { bound: f64 },

    #[error("see-saw degenerate: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake-case name of the variant, for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PartyCount { .. } => "party_count",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::OutOfRange(_) => "out_of_range",
            Error::InvalidCorrelator(_) => "invalid_correlator",
            Error::InvalidBehavior(_) => "invalid_behavior",
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidObservable(_) => "invalid_observable",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::MissingData(_) => "missing_data",
            Error::NoSaturatingVertex { .. } => "no_saturating_vertex",
            Error::Degenerate(_) => "degenerate",
            Error::Unsupported(_) => "unsupported",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
