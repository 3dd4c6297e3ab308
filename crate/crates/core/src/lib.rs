//! Numerical laboratory for the logarithmic balanced model `f_β(x) = Σ c_i x^i`
//! on the complex plane: solving the balance conditions, and measuring the
//! asymptotic quantities built from the solved coefficients.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod solver;
pub mod asymptotics;
pub mod theory;
pub mod poisson;
pub mod experiment;

pub use error::{Error, Result};
