//! Degree growth, singularity confinement and characteristic-root analysis for
//! rational recurrences and quad-lattice equations.

pub mod cli;
pub mod degree;
pub mod dsl;
pub mod error;
pub mod lattice;
pub mod numeric;
pub mod reproduce;
pub mod singularity;
pub mod spectral;

pub use error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;
