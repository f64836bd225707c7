//! Exact, desk-scale verification that inner 2-local derivations on matrix
//! rings over finite commutative rings are inner derivations.

pub mod cli;
pub mod deriv;
pub mod error;
pub mod extend;
pub mod extract;
pub mod matrix;
pub mod rings;
pub mod twogen;

pub use error::{Error, Result};
pub use matrix::{Matrix, MatrixRing};
pub use rings::{Ring, RingElement};
