use thiserror::Error;

use crate::RationalExpr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown variable `{name}` at byte {position}")]
    UnknownVariable { name: String, position: usize },

    #[error("division by zero at byte {position}")]
    DivisionByZero { position: usize },

    #[error("substitution makes a denominator vanish identically")]
    ZeroDenominator,

    #[error("matrix shapes do not match: {0}")]
    Shape(String),

    /// `certificate` is a left-null vector `y` of the coefficient matrix with
    /// `y . rhs != 0`.
    #[error("linear system is infeasible")]
    Infeasible { certificate: Vec<RationalExpr> },
}
