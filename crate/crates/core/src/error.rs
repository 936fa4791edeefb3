use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("update is not invertible: {0}")]
    NonInvertibleUpdate(String),
    #[error("event has dimension {event}, system has dimension {system}")]
    DimensionMismatch { event: usize, system: usize },
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error("outcome space must be nonempty")]
    EmptySystem,
    #[error("outcome count overflows: {0}")]
    SizeOverflow(String),
    #[error("point {index} has {found} coordinates, expected {expected}")]
    RaggedPoints { index: usize, found: usize, expected: usize },
    #[error("outcome index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("event splits a leaf cell of {size} outcomes")]
    EventNotRepresentable { size: usize },
    #[error("unsupported set system: {0}")]
    UnsupportedSystem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative discriminant {0}: no interior maximizer")]
    NegativeDiscriminant(f64),
    #[error("minimum weight {min_weight} lies below the multiplier {multiplier}; closed form requires an interior maximizer")]
    BoundaryKkt { min_weight: f64, multiplier: f64 },
    #[error("multi-resolution state is incoherent (gap {0:e})")]
    IncoherentState(f64),
    #[error("price {0} is at a log singularity")]
    LogSingularity(f64),
    #[error("node spans the whole outcome space; no parent constraint to correct")]
    FullSpanNode,
    #[error("no feasible scale within bound {0}")]
    NoFeasibleScale(f64),
    #[error("input must be nonnegative, got {0}")]
    NegativeInput(f64),
    #[error("baskets overlap")]
    OverlappingBaskets,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors raised by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeDiscriminant(_)
                | Error::BoundaryKkt { .. }
                | Error::IncoherentState(_)
                | Error::LogSingularity(_)
                | Error::NoFeasibleScale(_)
                | Error::NonFinite(_)
        )
    }
}
