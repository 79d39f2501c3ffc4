use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("predicate `{predicate}` used with arity {found}, declared with arity {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("task `{task}` needs at least {min} constants, got {got}")]
    TooFewConstants { task: String, min: usize, got: usize },

    #[error("task schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("atom `{0}` is both a positive and a negative example")]
    OverlappingExamples(String),

    #[error("atom sets differ: {0}")]
    MismatchedAtoms(String),

    #[error("shape mismatch: expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("zero-norm embedding under cosine similarity ({0})")]
    ZeroNorm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("non-finite loss at iteration {iteration}: {diagnostic}")]
    NonFiniteLoss { iteration: usize, diagnostic: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
