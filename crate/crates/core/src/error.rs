use thiserror::Error;

use crate::geometry::Pair;

/// Errors raised by the TDOA-space routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("at least 3 sensors are required, got {0}")]
    TooFewSensors(usize),

    #[error("unsupported spatial dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("non-finite coordinate or value")]
    NonFinite,

    #[error("sensors {0} and {1} coincide")]
    CoincidentSensors(usize, usize),

    #[error("point coincides with sensor {0}")]
    AtSensor(usize),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid sensor pair {0}")]
    InvalidPair(Pair),

    #[error("duplicate sensor pair {0}")]
    DuplicatePair(Pair),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("rank deficient: rank {rank}, required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("sensors are collinear")]
    Collinear,

    #[error("TDOA point is not in the image of the TDOA map")]
    NotInImage,

    #[error("TDOA point lies on the ellipse and corresponds to a source at infinity")]
    SourceAtInfinity,

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;
