//! Subspace regression on the Grassmann manifold.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense and banded kernels (QR, Cholesky-QR2, symmetric
//!   eigensolvers, Lyapunov, RK4).
//! - [`grassmann`]: subspace losses and their gradients, geodesics, the
//!   geodesic embedding construction and subspace metrics.
//! - [`eigencount`]: exact counting of eigenvector positions for the
//!   constant-coefficient Dirichlet eigenproblem, with Monte Carlo censuses.
//! - [`fields`]: random input generators (Gaussian random fields, contrast
//!   maps, Morse potentials).
//! - [`problems`]: operators, PDE integrators and the dataset container.
//! - [`learn`]: regressors, training, normal-coordinate interpolation and
//!   evaluation.
//! - [`solvers`]: deflated CG, two-grid correction, POD/Galerkin ROM,
//!   balanced truncation and finite-horizon LQR.

pub mod eigencount;
pub mod error;
pub mod exec;
pub mod fields;
pub mod grassmann;
pub mod learn;
pub mod numerics;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use numerics::DenseMatrix;
