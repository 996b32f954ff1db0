use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::numerics::{cholesky_qr2, orthonormality_error, qr_thin};
use crate::{Error, Result};

/// Orthonormality tolerance for stored bases and horizontality of tangents.
pub const ORTHO_TOL: f64 = 1e-10;

/// Column-orthonormal n×p matrix representing a point of Gr(p, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrthoBasis(DMatrix<f64>);

impl OrthoBasis {
    /// Wraps `m` after checking ‖mᵀm − I‖_F ≤ [`ORTHO_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() < m.ncols() {
            return Err(Error::DimensionMismatch(format!("basis {}x{} has more columns than rows", m.nrows(), m.ncols())));
        }
        let err = orthonormality_error(&m);
        if !(err <= ORTHO_TOL) {
            return Err(Error::InvalidArgument(format!("basis not orthonormal: ‖QᵀQ−I‖ = {err:e}")));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// Orthonormalizes a raw full-rank matrix with Cholesky-QR2, falling back
    /// to Householder QR when the Gram matrix is too ill-conditioned.
    pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Self> {
        match cholesky_qr2(m) {
            Ok(q) => Ok(Self(q)),
            Err(Error::RankDeficient(_)) => qr_thin(m).map(|(q, _)| Self(q)),
            Err(e) => Err(e),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self(DMatrix::zeros(n, 0))
    }

    /// Span of the first `p` standard basis vectors of Rⁿ.
    pub fn coordinate(n: usize, p: usize) -> Self {
        Self(DMatrix::identity(n, p))
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Orthogonal projector U Uᵀ.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }
}

/// Tangent vector Δ at `base`, horizontal: baseᵀΔ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    base: OrthoBasis,
    delta: DMatrix<f64>,
}

impl TangentVector {
    pub fn new(base: OrthoBasis, delta: DMatrix<f64>) -> Result<Self> {
        if delta.shape() != base.matrix().shape() {
            return Err(Error::DimensionMismatch(format!(
                "tangent {:?} at base {:?}",
                delta.shape(),
                base.matrix().shape()
            )));
        }
        let vert = (base.matrix().transpose() * &delta).norm();
        if !(vert <= ORTHO_TOL * delta.norm().max(1.0)) {
            return Err(Error::InvalidArgument(format!("tangent not horizontal: ‖UᵀΔ‖ = {vert:e}")));
        }
        Ok(Self { base, delta })
    }

    /// Projects an arbitrary n×p matrix onto the horizontal space at `base`.
    pub fn project(base: OrthoBasis, m: &DMatrix<f64>) -> Result<Self> {
        if m.shape() != base.matrix().shape() {
            return Err(Error::DimensionMismatch("tangent shape differs from base".into()));
        }
        let u = base.matrix();
        let delta = m - u * (u.transpose() * m);
        Ok(Self { base, delta })
    }

    pub(crate) fn new_unchecked(base: OrthoBasis, delta: DMatrix<f64>) -> Self {
        Self { base, delta }
    }

    pub fn zero(base: OrthoBasis) -> Self {
        let (n, p) = base.matrix().shape();
        Self { base, delta: DMatrix::zeros(n, p) }
    }

    pub fn base(&self) -> &OrthoBasis {
        &self.base
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// Frobenius norm, the geodesic speed.
    pub fn norm(&self) -> f64 {
        self.delta.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { base: self.base.clone(), delta: &self.delta * s }
    }
}
