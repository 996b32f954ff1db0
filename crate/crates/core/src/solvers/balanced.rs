//! Balanced truncation by the square-root method.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::numerics::{solve_lyapunov, svd_sorted, sym_eig_sorted};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedReduction {
    /// Leading balancing directions T̄ (n×r).
    pub projection: DMatrix<f64>,
    /// Left inverse L̄ (r×n) with L̄ T̄ = I.
    pub left_inverse: DMatrix<f64>,
    /// All Hankel singular values, descending.
    pub hankel: Vec<f64>,
}

impl BalancedReduction {
    /// Reduced realisation (L̄AT̄, L̄B, CT̄).
    pub fn reduce(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (&self.left_inverse * a * &self.projection, &self.left_inverse * b, c * &self.projection)
    }
}

/// Factor L with W = LLᵀ from the eigendecomposition of a symmetric
/// positive semi-definite W; tiny negative eigenvalues are clamped to 0.
fn psd_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig_sorted(w);
    let mut l = vecs;
    for (j, v) in vals.iter().enumerate() {
        l.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    l
}

/// Controllability and observability Gramians of (A, B, C).
pub fn gramians(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if b.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch(format!("A {n}x{n}, B {:?}, C {:?}", b.shape(), c.shape())));
    }
    let wc = solve_lyapunov(a, &(b * b.transpose()))?;
    let wo = solve_lyapunov(&a.transpose(), &(c.transpose() * c))?;
    Ok((wc, wo))
}

/// Balancing transformation truncated to the `r` leading Hankel directions.
pub fn balanced_truncation(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, r: usize) -> Result<BalancedReduction> {
    let n = a.nrows();
    if r > n {
        return Err(Error::InvalidArgument(format!("cannot keep {r} of {n} states")));
    }
    let (wc, wo) = gramians(a, b, c)?;
    let lc = psd_factor(&wc);
    let lo = psd_factor(&wo);
    let svd = svd_sorted(&(lo.transpose() * &lc));
    let hankel: Vec<f64> = svd.singular_values.iter().cloned().collect();
    if r > 0 && !(hankel[r - 1] > 1e-14 * hankel[0]) {
        return Err(Error::RankDeficient(format!("Hankel value {} is numerically zero", r)));
    }
    let mut projection = &lc * svd.v.columns(0, r);
    let mut left_inverse = svd.u.columns(0, r).transpose() * lo.transpose();
    for j in 0..r {
        let s = hankel[j].sqrt();
        projection.column_mut(j).unscale_mut(s);
        left_inverse.row_mut(j).unscale_mut(s);
    }
    Ok(BalancedReduction { projection, left_inverse, hankel })
}

/// Largest singular value of G(iω) = C(iωI − A)⁻¹B.
pub fn frequency_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, omega: f64) -> f64 {
    let n = a.nrows();
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        Complex::new(-a[(i, j)], if i == j { omega } else { 0.0 })
    });
    let bc = b.map(|x| Complex::new(x, 0.0));
    let x = m.lu().solve(&bc).unwrap_or_else(|| DMatrix::from_element(n, b.ncols(), Complex::new(f64::INFINITY, 0.0)));
    let g = c.map(|x| Complex::new(x, 0.0)) * x;
    g.singular_values().max()
}
