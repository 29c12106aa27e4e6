use thiserror::Error;

/// Errors raised by the library. Configuration parsing has its own
/// [`crate::cli::config::ConfigError`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("power-law exponent d must be >= 1 (> 1 for the normalization constant), got {0}")]
    InvalidExponent(f64),
    #[error("number of locations must be positive")]
    NoLocations,
    #[error("rank assignment is not a permutation of 0..{0}")]
    InvalidRanks(usize),
    #[error("knowledge level l={l} outside 1..={n}")]
    InvalidKnowledge { l: usize, n: usize },
    #[error("location index {index} out of range for {n} locations")]
    LocationOutOfRange { index: usize, n: usize },
    #[error("partial pattern is empty")]
    EmptyPartialPattern,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
    #[error("matching threshold must be finite and >= 0, got {0}")]
    InvalidDelta(f64),
    #[error("scores come from metrics with different orientations")]
    OrientationMismatch,
    #[error("rest time bounds invalid: t_min={t_min}, t_max={t_max}")]
    InvalidRestBounds { t_min: f64, t_max: f64 },
    #[error("node {node} advanced at {now} before its next move at {next}")]
    EarlyAdvance { node: usize, now: u64, next: u64 },
    #[error("no pattern known for node {0}")]
    MissingPattern(usize),
    #[error("no delivered bundles")]
    NoDeliveries,
    #[error("at least 2 samples required for a confidence interval, got {0}")]
    TooFewSamples(usize),
    #[error("runs were not produced from the same traffic realization")]
    MismatchedRuns,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
