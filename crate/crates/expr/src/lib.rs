//! Exact computer algebra over Q for time-shifted variables.
//!
//! The universal value is [`RationalExpr`], a multivariate rational function
//! kept in a canonical form so that equality is decidable by comparison.
//! [`ExprMatrix`] provides generic-rank linear algebra over the function
//! field.

mod error;
mod matrix;
mod parse;
mod poly;
mod rational;
mod var;

pub use error::ExprError;
pub use matrix::{generic_rank, solve_linear, ExprMatrix, LinearSolution};
pub use parse::{parse_expr, parse_expr_with};
pub use poly::{gcd, lcm, Monomial, Poly, Rational};
pub use rational::{rational, RationalExpr};
pub use var::{is_identifier, Var};

/// Exact partial derivative.
pub fn diff(e: &RationalExpr, v: &Var) -> RationalExpr {
    e.diff(v)
}

/// Simultaneous substitution followed by canonicalization.
pub fn substitute(
    e: &RationalExpr,
    bindings: &std::collections::BTreeMap<Var, RationalExpr>,
) -> Result<RationalExpr, ExprError> {
    e.substitute(bindings)
}

/// True iff `e` is identically zero.
pub fn is_zero(e: &RationalExpr) -> bool {
    e.is_zero()
}
