//! Error types for every pipeline stage.

use thiserror::Error;

use crate::series::Timestamp;

/// Violations of the quarterly-series invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series has no observations")]
    EmptySeries,
    #[error("series {id}: duplicate timestamp {at}")]
    DuplicateTimestamp { id: String, at: Timestamp },
    #[error("series {id}: gap between {prev} and {next} is not one quarter")]
    NonQuarterlyGap {
        id: String,
        prev: Timestamp,
        next: Timestamp,
    },
    #[error("series {id}: negative value {value} at {at}")]
    NegativeValue {
        id: String,
        at: Timestamp,
        value: f64,
    },
    #[error("series {id}: non-finite value at {at}")]
    NonFiniteValue { id: String, at: Timestamp },
}

/// Ingestion and synthesis failures.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("series {series_id}: observation at {at} appears twice")]
    DuplicateObservation { series_id: String, at: Timestamp },
    #[error(transparent)]
    Validation(#[from] SeriesError),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
}

/// Failures of the pairwise proximity measures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for an all-zero vector")]
    ZeroVector,
}

/// Forecaster failures, classical and neural.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("insufficient history: need {needed} observations, have {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("every candidate order failed to fit")]
    AllFitsFailed,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite activation")]
    NonFiniteActivation,
    #[error("training loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },
}

impl ForecastError {
    /// Stable snake_case tag used in report rows.
    pub fn tag(&self) -> &'static str {
        match self {
            ForecastError::InsufficientHistory { .. } => "insufficient_history",
            ForecastError::NonConvergence { .. } => "non_convergence",
            ForecastError::AllFitsFailed => "all_fits_failed",
            ForecastError::ShapeMismatch { .. } => "shape_mismatch",
            ForecastError::NonFiniteActivation => "non_finite_activation",
            ForecastError::DivergedLoss { .. } => "diverged_loss",
        }
    }
}

/// Evaluation-protocol failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("series too short to split: {len} observations")]
    TooShort { len: usize },
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
}
