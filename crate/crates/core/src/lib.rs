//! Minimization of sparse polynomials over the unit box `[0,1]^n`.
//!
//! The solver detects variables that can be taken binary at an optimum,
//! splits the remaining continuous variables into connected blocks, tabulates
//! each block's minimum over every assignment of its binary neighbors, and
//! solves the resulting binary polynomial problem by dynamic programming over
//! a tree decomposition. Quadratic instances are solved exactly over the
//! rationals.

pub mod block_solver;
pub mod bpo;
pub mod error;
pub mod generate;
pub mod hidden_binary;
pub mod pipeline;
pub mod poly;
pub mod rng;
pub mod scalar;
pub mod structure;
pub mod treewidth;

pub use error::{Error, Result};
pub use poly::{Monomial, Point, Polynomial, Rational, Value};
