//! Bipartite entanglement detection by local measurements.
//!
//! - [`linalg`]: Hermitian operators, density matrices, partial trace/transpose, trace norm.
//! - [`basis`]: orthonormal Hermitian operator bases (generalized Gell-Mann).
//! - [`povm`]: construction and validation of informationally complete (N,M)-POVMs.
//! - [`criteria`]: correlation-matrix, joint-probability and NPT criteria.
//! - [`sampler`]: hit-and-run sampling of density matrices under the Hilbert–Schmidt measure.
//! - [`estimate`]: volume-ratio estimation, parameter sweeps and the file formats used by the CLI.

pub mod basis;
pub mod criteria;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod povm;
pub mod sampler;

pub use error::{Error, Result};
pub use nalgebra;
