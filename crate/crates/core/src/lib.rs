//! Generalized CHSH Bell inequalities for local dimension `d`.
//!
//! The crate builds the Bell functionals, computes their classical maximum by
//! exhaustive enumeration, evaluates and optimizes quantum strategies against
//! them, and checks the block structure that characterizes maximal violation.

pub mod bell;
pub mod classical;
pub mod correlation;
pub mod error;
pub mod ideal;
pub mod json;
pub mod linalg;
pub mod reduction;
pub mod seesaw;
pub mod selftest;

pub use bell::{evaluate, BellFunctional, CrossDiagonalMode, TiltedSpec, Variant};
pub use correlation::{
    correlation_from_deterministic, correlation_from_quantum, validate_correlation, Correlation,
    DeterministicStrategy, QuantumStrategy, ValidationReport,
};
pub use error::{Error, Result};
