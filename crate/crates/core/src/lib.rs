//! Fundamental matrices, Cauchy-problem solutions and sharp pointwise-estimate
//! coefficients for weakly coupled parabolic systems with time-dependent
//! coefficients.

pub mod coeffs;
pub mod error;
pub mod interp;
pub mod kernels;
pub mod matfun;
pub mod oracle;
pub mod quad;
pub mod sharp;
pub mod solve;
pub mod special;

pub use coeffs::{integrate_coefficients, AccumulatedIntegrals, CoefficientPath, CoefficientSet};
pub use error::{Error, Result};
pub use matfun::{Matrix, SymMatrix};
