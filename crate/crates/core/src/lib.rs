//! Optimal and minimax-robust linear interpolation of functionals of
//! sequences with stationary n-th increments, observed exactly in the past and
//! with additive uncorrelated noise in the future.

pub mod error;
pub mod filtering;
pub mod increments;
pub mod interpolate;
pub mod linalg;
pub mod minimax;
pub mod operators;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
