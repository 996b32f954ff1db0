//! Two-grid correction with damped Jacobi smoothing.
//!
//! One sweep is x ← x + ωD⁻¹(b − Ax), x ← x + V(VᵀAV)⁻¹Vᵀ(b − Ax),
//! x ← x + ωD⁻¹(b − Ax). The error propagates by T = S(I − P)S with
//! S = I − ωD⁻¹A and P the A-orthogonal projector onto S(V).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::cg::Coarse;
use crate::exec::stream_rng;
use crate::grassmann::OrthoBasis;
use crate::numerics::{sym_eig_dense, sym_eig_smallest_with, EigOptions, SparseOperator};
use crate::{Error, Result};

/// Default Jacobi damping for the two-grid targets.
pub const DEFAULT_OMEGA: f64 = 0.9;

/// Default number of power iterations.
pub const DEFAULT_POWER_ITERS: usize = 200;

/// Prepared two-grid iteration for a fixed (A, V, ω).
pub struct TwoGrid<'a> {
    a: &'a SparseOperator,
    d_inv: DVector<f64>,
    omega: f64,
    coarse: Coarse,
}

impl<'a> TwoGrid<'a> {
    pub fn new(a: &'a SparseOperator, v: &OrthoBasis, omega: f64) -> Result<Self> {
        let d = a.diag();
        if d.iter().any(|x| *x == 0.0) {
            return Err(Error::InvalidArgument("operator has a zero diagonal entry".into()));
        }
        Ok(Self { a, d_inv: d.map(|x| 1.0 / x), omega, coarse: Coarse::new(a, v)? })
    }

    fn smooth(&self, b: &DVector<f64>, x: &mut DVector<f64>) {
        let r = b - self.a.matvec(x);
        x.axpy(self.omega, &r.component_mul(&self.d_inv), 1.0);
    }

    /// One sweep for A x = b.
    pub fn apply(&self, b: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let mut x = x.clone();
        self.smooth(b, &mut x);
        let r = b - self.a.matvec(&x);
        x += self.coarse.correct(&r);
        self.smooth(b, &mut x);
        x
    }

    /// Error propagation T e.
    pub fn propagate(&self, e: &DVector<f64>) -> DVector<f64> {
        let s = |v: &DVector<f64>| v - (self.a.matvec(v).component_mul(&self.d_inv)) * self.omega;
        let y = s(e);
        let y = &y - self.coarse.a_project(&y);
        s(&y)
    }

    /// Power-method estimate of ρ(T). T is self-adjoint and positive
    /// semi-definite in the A-inner product, so the A-Rayleigh quotient
    /// converges to ρ(T) from below.
    pub fn spectral_radius(&self, max_iters: usize, seed: u64) -> f64 {
        let n = self.a.dim();
        let mut rng = stream_rng(seed, 0);
        let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a_norm = |x: &DVector<f64>| x.dot(&self.a.matvec(x)).max(0.0).sqrt();
        v.unscale_mut(a_norm(&v));
        let mut rho = 0.0;
        for _ in 0..max_iters {
            let w = self.propagate(&v);
            let aw = self.a.matvec(&w);
            let q = aw.dot(&v).abs();
            let wn = w.dot(&aw).max(0.0).sqrt();
            let done = rho > 0.0 && (q - rho).abs() <= 1e-8 * q;
            rho = q;
            if wn == 0.0 || !wn.is_finite() || done {
                break;
            }
            v = w / wn;
        }
        rho
    }
}

/// One two-grid sweep.
pub fn two_grid_apply(
    a: &SparseOperator,
    v: &OrthoBasis,
    omega: f64,
    b: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(TwoGrid::new(a, v, omega)?.apply(b, x))
}

/// Spectral radius of the two-grid error propagator with a fixed-seed start.
pub fn two_grid_rho(a: &SparseOperator, v: &OrthoBasis, omega: f64, power_iters: usize) -> Result<f64> {
    if power_iters < 50 {
        return Err(Error::InvalidArgument(format!("power method needs at least 50 iterations, got {power_iters}")));
    }
    Ok(TwoGrid::new(a, v, omega)?.spectral_radius(power_iters, 0x7760))
}

/// The `m` eigenvectors of I − ωD⁻¹A with the largest |eigenvalue|,
/// orthonormalised. Computed from the symmetric similar matrix
/// D^{-1/2}AD^{-1/2}, whose smallest and largest eigenvalues μ give the
/// candidates 1 − ωμ.
pub fn jacobi_leading_eigenspace(a: &SparseOperator, omega: f64, m: usize) -> Result<OrthoBasis> {
    let n = a.dim();
    if m > n {
        return Err(Error::InvalidArgument(format!("requested {m} vectors in dimension {n}")));
    }
    let d = a.diag();
    if d.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument("Jacobi eigenspace needs a positive diagonal".into()));
    }
    let s: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..n {
        t.extend(a.row(i).map(|(j, v)| (i, j, s[i] * v * s[j])));
    }
    let sym = SparseOperator::from_triplets(n, &t)?;
    let opts = EigOptions::default();

    // Candidates as (|1 − ωμ|, vector in the symmetric frame).
    let mut cands: Vec<(f64, DVector<f64>)> = Vec::new();
    if n <= opts.tolerances.dense_eig_max_dim {
        let e = sym_eig_dense(&sym.to_dense());
        for (j, mu) in e.values.iter().enumerate() {
            cands.push(((1.0 - omega * mu).abs(), e.vectors.column(j).into_owned()));
        }
    } else {
        let low = sym_eig_smallest_with(&sym, m, &opts)?;
        for (j, mu) in low.values.iter().enumerate() {
            cands.push(((1.0 - omega * mu).abs(), low.vectors.column(j).into_owned()));
        }
        // Gershgorin on the similar matrix D⁻¹A.
        let cap = (0..n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>() / d[i]).fold(0.0, f64::max);
        let weakest = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        if m > 0 && (omega * cap - 1.0) >= weakest {
            // Top of the spectrum: smallest eigenvalues of cI − M.
            let c = 1.01 * cap;
            let flipped = SparseOperator::diagonal(&vec![c; n]).add_scaled(-1.0, &sym)?;
            let high = sym_eig_smallest_with(&flipped, m, &opts)?;
            for (j, nu) in high.values.iter().enumerate() {
                cands.push(((1.0 - omega * (c - nu)).abs(), high.vectors.column(j).into_owned()));
            }
        }
    }
    // Stable sort keeps the lower end first on exact ties.
    cands.sort_by(|x, y| y.0.total_cmp(&x.0));
    let cols: Vec<DVector<f64>> =
        cands.into_iter().take(m).map(|(_, y)| DVector::from_fn(n, |i, _| s[i] * y[i])).collect();
    if cols.is_empty() {
        return Ok(OrthoBasis::empty(n));
    }
    OrthoBasis::orthonormalize(&DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn poisson(n: usize) -> SparseOperator {
        SparseOperator::laplacian_1d(n, 1.0 / (n + 1) as f64)
    }

    #[test]
    fn fixed_point() {
        let a = poisson(31);
        let x = DVector::from_fn(31, |i, _| (i as f64).cos());
        let b = a.matvec(&x);
        let v = jacobi_leading_eigenspace(&a, 0.9, 4).unwrap();
        let y = two_grid_apply(&a, &v, 0.9, &b, &x).unwrap();
        assert!((y - &x).norm() < 1e-12 * x.norm());
    }

    #[test]
    fn jacobi_radius_matches_analytic() {
        let a = poisson(31);
        let rho = two_grid_rho(&a, &OrthoBasis::empty(31), 1.0, 2000).unwrap();
        let exact = (PI / 32.0).cos().powi(2);
        assert!((rho - exact).abs() < 1e-4, "{rho} vs {exact}");
    }

    #[test]
    fn exact_coarse_space_improves_contraction() {
        let a = poisson(31);
        let plain = two_grid_rho(&a, &OrthoBasis::empty(31), 0.9, 500).unwrap();
        let v = jacobi_leading_eigenspace(&a, 0.9, 5).unwrap();
        let deflated = two_grid_rho(&a, &v, 0.9, 500).unwrap();
        assert!(deflated < plain);
        let full = jacobi_leading_eigenspace(&a, 0.9, 31).unwrap();
        assert!(two_grid_rho(&a, &full, 0.9, 50).unwrap() < 1e-12);
    }

    #[test]
    fn undamped_eigenspace_mixes_both_ends() {
        // With ω = 1 the spectrum of I − D⁻¹A is symmetric, so the leading
        // pair is the smoothest and the most oscillatory mode.
        let a = poisson(15);
        let v = jacobi_leading_eigenspace(&a, 1.0, 2).unwrap();
        let smooth = DVector::from_fn(15, |i, _| (PI * (i + 1) as f64 / 16.0).sin());
        let rough = DVector::from_fn(15, |i, _| (15.0 * PI * (i + 1) as f64 / 16.0).sin());
        for f in [smooth, rough] {
            let p = v.matrix().transpose() * &f;
            assert!((p.norm() - f.norm()).abs() < 1e-10 * f.norm());
        }
    }
}
