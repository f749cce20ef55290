use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("config space too large: {size} configurations exceeds cap {cap}")]
    ConfigSpaceTooLarge { size: u128, cap: u128 },

    #[error("permanent of a {size}x{size} matrix exceeds the size cap {cap}")]
    PermanentTooLarge { size: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("memory overlaps are only defined for two photons, got {0}")]
    UnsupportedPhotonNumber(usize),

    #[error("null overlap field: normalization denominator is zero")]
    NullOverlapField,

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
