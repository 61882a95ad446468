//! Rank minimization for positive semidefinite matrices under affine
//! constraints.
//!
//! The rank of `X` is expressed through an auxiliary matrix `U` with
//! `0 <= U <= I` that must be complementary to `X` (`<X, U> = 0`); the
//! complementarity is moved into the objective as a penalty
//! `n - <I, U> + rho <X, U>`, and the resulting problem is solved with
//! proximal alternating linearized minimization (PALM), optionally with
//! momentum. The X-step is a projection onto `{A(X) = b, X psd}` solved by a
//! semismooth Newton-CG method on its dual; the U-step has a closed form.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod baseline;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod palm;
pub mod problems;
pub mod prox_u;
pub mod prox_x;
pub mod symmat;

pub use affine::{AffineOperator, SparseSym};
pub use error::{Error, Result};
pub use symmat::{EigenDecomposition, SymmetricMatrix};
