//! Desk-scale laboratory for sparse iid random matrices: samplers, the
//! row/column revelation walk, secular singular-value updates, expansion and
//! anticoncentration statistics, and hermitized spectral measures.

pub mod anticonc;
pub mod constants;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod spectral;
pub mod sv;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use matrix::{BinaryMatrix, DegreeSequence};
pub use model::ModelParams;
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
