//! Sparsification of generalized linear model objectives
//! `F(x) = Σ f_i(⟨a_i, x⟩ - b_i)` and iterative-refinement solvers built on it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod losses;
pub mod par;
pub mod rng;
pub mod solve;
pub mod sparsify;
pub mod weights;

pub use error::{Error, Result};
pub use instance::ProblemInstance;
pub use linalg::RowMatrix;
pub use losses::LossFamily;
