//! Decide and solve the matrix equation X^⊤AX = B over ℂ, where A is given
//! as a direct sum of canonical-form-for-congruence blocks and B is
//! symmetric. Decisions come with verified certificates: every constructed
//! solution is checked by residual, exactly for Gaussian-rational data.

pub mod blocks;
pub mod cmatrix;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod io;
pub mod invariants;
pub mod matrix;
pub mod reduction;
pub mod sample;
pub mod solver;
pub mod scalar;

pub use blocks::{Block, BlockKind, BlockSum};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::{parse_scalar, GaussianRational, Rational, Scalar};
