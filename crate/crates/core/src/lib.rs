//! Numerical toolkit for `det(D²u) = f` with positive periodic right-hand side.
//!
//! * [`lattice`]: torus and box lattices, fields, mollification, resampling, grid files.
//! * [`discrete_ma`]: the monotone wide-stencil operator, its linearization and
//!   the discrete Monge-Ampère measure.
//! * [`periodic`]: the cell problem on the torus and mollified continuation.
//! * [`dirichlet`]: Dirichlet problems on convex domains, sections and John normalization.
//! * [`structure`]: recovery of `A`, `b` and the periodic part from entire solutions.
//! * [`verify`] and [`cli`]: the acceptance suite and the batch front end.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirichlet;
pub mod discrete_ma;
pub mod error;
pub mod cli;
pub mod lattice;
mod newton;
pub mod periodic;
pub mod quadratic;
mod sparse;
pub mod problems;
pub mod structure;
pub mod verify;

pub use error::{MaError, Result};
pub use quadratic::QuadraticPart;
