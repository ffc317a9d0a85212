use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {value} exceeds the safe magnitude bound 2^40")]
    CoordinateOverflow { value: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate initial site {0}")]
    DuplicateSite(String),

    #[error("Green function diverges in dimension {0}; it is finite only for d >= 3")]
    GreenDivergent(usize),

    #[error("crossing annulus does not fit the window: {0}")]
    SpecDoesNotFit(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Candidate search for a renormalization embedding came up empty.
    /// For valid inputs with ell >= 6 this must never happen.
    #[error("no candidate found at tree node '{node}': {detail}")]
    NoCandidate { node: String, detail: String },

    #[error("guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
