use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point lies outside the domain (distance to boundary {signed_distance:e})")]
    OutsideDomain { signed_distance: f64 },

    #[error("point is not on the boundary (|x - center| - radius = {offset:e})")]
    NotOnBoundary { offset: f64 },

    #[error("kernel is singular at coinciding points")]
    Singular,

    #[error("bubbles {first} and {second} are not disjoint (gap {gap:e})")]
    Overlap { first: usize, second: usize, gap: f64 },

    #[error("bubble {index}: radius/distance ratio {ratio} is not below 1/2")]
    RatioTooLarge { index: usize, ratio: f64 },

    #[error("bubble {index} is not strictly inside the domain")]
    BubbleOutside { index: usize },

    #[error("no Whitney cube fits inside the domain at max_level {max_level}")]
    EmptyDecomposition { max_level: i32 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
