//! Dense and sparse linear-algebra kernels shared by the rest of the crate.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>`; the sparse symmetric stencil
//! operators produced by finite-difference assembly live in [`sparse`].

mod band;
mod dense;
mod eig;
mod lyapunov;
mod ode;
pub mod sparse;

pub use band::BandCholesky;
pub use dense::{
    cholesky_qr2, cholesky_qr2_with_r, cholesky_upper, frobenius, orthonormality_error, qr_thin,
    solve_upper, solve_upper_transpose, svd_sorted, sym_eig_sorted, SortedSvd,
};
pub use eig::{sym_eig_dense, sym_eig_smallest, sym_eig_smallest_with, EigDecomposition, EigOptions};
pub use lyapunov::{solve_lyapunov, spectral_abscissa};
pub use ode::{rk4_integrate, rk4_step};
pub use sparse::SparseOperator;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Row/column dense matrix used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;

/// Numerical thresholds used by the kernels in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `qr_thin` fails when the smallest |R_ii| falls below this fraction of the largest.
    pub qr_rank: f64,
    /// Relative pivot threshold for the Cholesky passes of Cholesky-QR2.
    pub cholesky_pivot: f64,
    /// Eigen-residual tolerance relative to the largest eigenvalue.
    pub eig_residual: f64,
    /// Operators of at most this dimension use the dense eigensolver.
    pub dense_eig_max_dim: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            qr_rank: 1e-12,
            cholesky_pivot: 1e-15,
            eig_residual: 1e-8,
            dense_eig_max_dim: 1024,
        }
    }
}
