use thiserror::Error;

/// Errors produced by the memory model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem {subsystem}: expected {expected} labels, found {found}")]
    FamilyMismatch {
        subsystem: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("channel is not trace preserving (deviation {deviation:.3e}) and is not flagged trace-decreasing")]
    NotTracePreserving { deviation: f64 },

    #[error("channel increases trace (excess {excess:.3e})")]
    TraceIncreasing { excess: f64 },

    #[error("post-selection has zero success probability")]
    ZeroProbability,

    #[error("invalid subsystem index {index} for a state with {count} subsystems")]
    InvalidIndex { index: usize, count: usize },

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unresolved grid: {0}")]
    UnresolvedGrid(String),

    #[error("input envelope carries zero energy")]
    ZeroInputEnergy,
}

pub type Result<T> = std::result::Result<T, Error>;
