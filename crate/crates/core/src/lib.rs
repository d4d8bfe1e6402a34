//! Compressed-sensing quantum state tomography.
//!
//! The crate reconstructs low-rank density matrices from a small random subset
//! of Pauli expectation values by trace-norm minimization, solved with singular
//! value thresholding. It is organised bottom-up:
//!
//! - [`pauli`]: the symplectic `(u, v)` representation of n-qubit Pauli
//!   observables and their sparse action on vectors and matrices.
//! - [`states`]: synthetic state generators and the metric suite.
//! - [`sampling`]: measurement schemes, noisy expectation estimation and the
//!   sampling operator.
//! - [`solver`]: the SVT reconstruction with dense and sparse eigen paths.
//! - [`certify`]: assumption-free near-purity certificates.
//! - [`harness`]: seeded experiment sweeps, file formats and the CLI plumbing.

pub mod certify;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod masked;
pub mod pauli;
pub mod sampling;
pub mod solver;
pub mod states;

pub use error::{Result, TomoError};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
