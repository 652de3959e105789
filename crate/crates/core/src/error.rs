//! Crate-wide error type.

/// Errors produced by parsing, evaluation and the numeric operators.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse { line: u32, col: u32, message: String },

    #[error("evaluation failed at index {index}: {reason}")]
    Eval { index: u64, reason: String },

    #[error("function evaluation failed at {arg}: {reason}")]
    FnDomain { arg: f64, reason: String },

    #[error("C({n}, {k}) exceeds the exact integer range")]
    BinomialOverflow { n: u64, k: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tail model unsupported here: {0}")]
    TailUnsupported(String),

    #[error("tail declaration violated by samples: {0}")]
    TailViolated(String),

    #[error("uncertified evaluation refused: {0}")]
    UncertifiedRefused(String),

    #[error("truncation target unreachable: {0}")]
    TruncationUnreachable(String),

    #[error("partial sums look divergent: {0}")]
    Diverging(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("index range mismatch: {0}")]
    IndexRange(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
