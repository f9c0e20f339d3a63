use thiserror::Error;

/// Errors surfaced by the library, tagged by the stage that produced them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tensor not positive semi-definite (pivot {pivot}, diagonal {value:.3e})")]
    NotPositiveSemiDefinite { pivot: usize, value: f64 },

    #[error("SCF failed to converge after {0} iterations")]
    ScfNonConvergence(usize),

    #[error("Hilbert space dimension {dim} exceeds dense limit {limit}")]
    DimensionOverLimit { dim: usize, limit: usize },

    #[error("walker died: {0}")]
    WalkerDead(String),

    #[error("population collapse: total weight {0:.3e} is not positive")]
    PopulationCollapse(f64),

    #[error("too few samples: {have} available, {need} required")]
    TooFewSamples { have: usize, need: usize },

    #[error("trial state is orthogonal to the ground state (overlap {0:.3e})")]
    OrthogonalTrial(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
