//! Conjugate gradients with optional deflation by a fixed subspace.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grassmann::OrthoBasis;
use crate::numerics::{cholesky_upper, solve_upper, solve_upper_transpose, SparseOperator};
use crate::{Error, Result};

/// Convergence record of an iterative solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    /// Relative residual ‖r_j‖/‖b‖ for j = 0..=iterations.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Seconds spent in the solve.
    pub wall_time: f64,
}

/// Factored coarse matrix E = VᵀAV together with AV.
pub(crate) struct Coarse {
    v: DMatrix<f64>,
    av: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Coarse {
    pub(crate) fn new(a: &SparseOperator, v: &OrthoBasis) -> Result<Self> {
        if v.ambient_dim() != a.dim() {
            return Err(Error::DimensionMismatch(format!("basis has {} rows, operator {}", v.ambient_dim(), a.dim())));
        }
        let v = v.matrix().clone();
        let av = a.mul_dense(&v);
        let mut e = v.transpose() * &av;
        e = (&e + e.transpose()) * 0.5;
        let r = if v.ncols() == 0 {
            DMatrix::zeros(0, 0)
        } else {
            cholesky_upper(&e, 1e-14).map_err(|_| Error::SingularCoarseMatrix)?
        };
        Ok(Self { v, av, r })
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.v.ncols() == 0
    }

    /// E⁻¹ y.
    fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        solve_upper(&self.r, &solve_upper_transpose(&self.r, y))
    }

    /// V E⁻¹ Vᵀ x.
    pub(crate) fn correct(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.is_empty() {
            return DVector::zeros(x.len());
        }
        &self.v * self.solve(&(self.v.transpose() * x))
    }

    /// V E⁻¹ (AV)ᵀ x, the A-orthogonal projection onto S(V).
    pub(crate) fn a_project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.is_empty() {
            return DVector::zeros(x.len());
        }
        &self.v * self.solve(&(self.av.transpose() * x))
    }
}

/// Plain conjugate gradients from x₀ = 0.
pub fn cg(a: &SparseOperator, b: &DVector<f64>, tol: f64, maxit: usize) -> Result<(DVector<f64>, SolverReport)> {
    deflated_cg(a, b, &OrthoBasis::empty(a.dim()), tol, maxit)
}

/// Deflated CG in init-projection form: x₀ = V(VᵀAV)⁻¹Vᵀb and every search
/// direction is re-projected to be A-orthogonal to S(V), so the residuals
/// stay orthogonal to S(V).
pub fn deflated_cg(
    a: &SparseOperator,
    b: &DVector<f64>,
    v: &OrthoBasis,
    tol: f64,
    maxit: usize,
) -> Result<(DVector<f64>, SolverReport)> {
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("rhs length {} for operator of size {n}", b.len())));
    }
    let coarse = Coarse::new(a, v)?;
    let bnorm = b.norm();
    if bnorm == 0.0 {
        let report = SolverReport { iterations: 0, residuals: vec![], converged: true, wall_time: 0.0 };
        return Ok((DVector::zeros(n), report));
    }
    let mut x = coarse.correct(b);
    let mut r = b - a.matvec(&x);
    let mut residuals = vec![r.norm() / bnorm];
    let mut p = &r - coarse.a_project(&r);
    let mut rr = r.dot(&r);
    let mut it = 0;
    while residuals[it] > tol {
        if it == maxit {
            return Err(Error::MaxIterations { iterations: it, residual: residuals[it] });
        }
        let ap = a.matvec(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::ConvergenceFailure(format!("non-positive curvature pᵀAp = {pap:e}")));
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.dot(&r);
        let beta = rr_new / rr;
        rr = rr_new;
        p = &r + &p * beta - coarse.a_project(&r);
        it += 1;
        residuals.push(rr.sqrt() / bnorm);
    }
    let report = SolverReport { iterations: it, residuals, converged: true, wall_time: start.elapsed().as_secs_f64() };
    Ok((x, report))
}
