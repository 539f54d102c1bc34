//! Numerical comparison geometry for sub-Riemannian Sasakian manifolds.
//!
//! The crate integrates the canonical Jacobi system `(A, B)` and the matrix
//! Riccati equation of a Jacobi curve, evaluates the closed-form comparison
//! functions for constant canonical curvature, and checks the Bishop volume,
//! Laplacian and conjugate-time comparisons on the Heisenberg group and the
//! complex Hopf fibration.
//!
//! Frame ordering everywhere is `(E1, E2, E3_1, ..., E3_{2n-1})`, with the last
//! slot reserved for the `p^h + p(v0) v0` direction.

pub mod comparison;
pub mod distance_field;
pub mod error;
pub mod geometry;
pub mod jacobi;
pub mod models;
pub mod ode;
pub mod quadrature;
pub mod special;
pub mod verify;
pub mod volume;

pub use error::{Error, Result};

/// Version string embedded in CLI output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
