//! Forward- and backward-flatness of nonlinear discrete-time systems
//! `x+ = f(x, u)` with rational right-hand sides.
//!
//! The backward test runs the forward test on the associated system
//! `z+ = psi_x(z, v)`, `eta = psi_u(z, v)` obtained by inverting the
//! extended map `(x, u) -> (f, g)`.

mod elim;
mod error;

pub mod backtest;
pub mod flatout;
pub mod geomtest;
pub mod jacrank;
pub mod sysmodel;
pub mod systems;
pub mod trajcheck;

pub use error::{Error, RankViolation, Result};
