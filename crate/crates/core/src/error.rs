use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0} (only 1, 2 and 3 are supported)")]
    UnsupportedDimension(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("sets overlap on a region of positive measure")]
    Overlap,
    #[error("both sets extend outside the computational box; their joint tail is not integrable")]
    NonIntegrableTail,
    #[error("set is unbounded: {0}")]
    Unbounded(String),
    #[error("unsupported shape for this operation: {0}")]
    Unsupported(String),
    #[error("point is not on the boundary (distance estimate {0:e})")]
    NotOnBoundary(f64),
    #[error("invalid boundary mesh: {0}")]
    InvalidMesh(String),
    #[error("set has zero volume")]
    ZeroVolume,
    #[error("volume target {target} unreachable: closest volumes {below} and {above}")]
    UnreachableVolume { target: f64, below: f64, above: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
