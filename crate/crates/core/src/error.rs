use std::fmt;

use flatness_expr::ExprError;
use thiserror::Error;

/// Which of the structural rank conditions a system violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankViolation {
    /// rank d(x,u)f < n
    Submersivity { rank: usize, n: usize },
    /// rank du f < m
    InputRank { rank: usize, m: usize },
    /// rank d(x,u)(f, g) < n + m
    Extension { rank: usize, expected: usize },
}

impl fmt::Display for RankViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankViolation::Submersivity { rank, n } => {
                write!(f, "submersivity: rank d(x,u) f = {rank} < n = {n}")
            }
            RankViolation::InputRank { rank, m } => {
                write!(f, "input rank: rank du f = {rank} < m = {m}")
            }
            RankViolation::Extension { rank, expected } => {
                write!(
                    f,
                    "extension: rank d(x,u) (f, g) = {rank} < n + m = {expected}"
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{context}: {source}")]
    Expr {
        context: String,
        #[source]
        source: ExprError,
    },
    #[error("rank condition violated ({0})")]
    Rank(RankViolation),
    #[error("extended map not invertible by elimination; unresolved: {}", .unresolved.join(", "))]
    InversionNotFound { unresolved: Vec<String> },
    #[error("inverse map does not invert (f, g): {0}")]
    InverseMismatch(String),
    #[error("inverse map required but not available")]
    NoInverse,
    #[error("distribution is not projectable: its pushforward depends on {0}")]
    NotProjectable(String),
    #[error("vector fields live on different charts")]
    ChartMismatch,
    #[error("unsupported candidate: {0}")]
    UnsupportedCandidate(String),
    #[error("flat output not derived: {0}")]
    DerivationFailed(String),
    #[error("verification failed: unresolved {}", .unresolved.join(", "))]
    VerificationFailed {
        unresolved: Vec<String>,
        residual: Vec<String>,
    },
    #[error("denominator vanishes at step {step}")]
    DenominatorZero { step: usize },
    #[error("{0}")]
    Io(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn expr(context: impl Into<String>, source: ExprError) -> Self {
        Error::Expr {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
