use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A field or scale is not resolved by the grid it lives on.
    #[error("resolution floor violated: {0}")]
    Resolution(String),

    #[error("solvability violated: |<g,Q>| = {pairing:.3e} exceeds tolerance {tolerance:.3e}")]
    Solvability { pairing: f64, tolerance: f64 },

    #[error("block ({j},{k}): {source}")]
    Block {
        j: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solve breakdown at row {row} (pivot {pivot:.3e})")]
    SolverBreakdown { row: usize, pivot: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("profile block ({j},{k}) required but not yet solved")]
    MissingBlock { j: usize, k: usize },

    #[error("field is not even (asymmetry {0:.3e})")]
    NotEven(f64),

    #[error("zero field")]
    ZeroField,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
