use nalgebra::{DMatrix, DVector};

use super::Tolerances;
use crate::{Error, Result};

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ‖QᵀQ − I‖_F.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    frobenius(&(g - DMatrix::identity(q.ncols(), q.ncols())))
}

/// Thin Householder QR with a positive diagonal in R.
pub fn qr_thin(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, p) = m.shape();
    if n < p {
        return Err(Error::DimensionMismatch(format!("qr_thin needs rows >= cols, got {n}x{p}")));
    }
    if p == 0 {
        return Ok((DMatrix::zeros(n, 0), DMatrix::zeros(0, 0)));
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            r.row_mut(j).neg_mut();
            q.column_mut(j).neg_mut();
        }
    }
    let diag: Vec<f64> = (0..p).map(|j| r[(j, j)]).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || smallest <= Tolerances::default().qr_rank * largest {
        return Err(Error::RankDeficient(format!(
            "qr_thin: |R| diagonal ratio {:e}",
            if largest > 0.0 { smallest / largest } else { 0.0 }
        )));
    }
    Ok((q, r))
}

/// Upper Cholesky factor R (G = RᵀR) with a relative pivot threshold.
pub fn cholesky_upper(g: &DMatrix<f64>, rel_pivot: f64) -> Result<DMatrix<f64>> {
    let p = g.nrows();
    let scale = (0..p).map(|i| g[(i, i)].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::RankDeficient("cholesky: zero or non-finite Gram matrix".into()));
    }
    let mut r = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        if d <= rel_pivot * scale {
            return Err(Error::RankDeficient(format!("cholesky pivot {j} = {d:e}")));
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for i in (j + 1)..p {
            let mut s = g[(j, i)];
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok(r)
}

/// Solves X R = B for X (R upper triangular), i.e. X = B R⁻¹.
fn right_solve_upper(b: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let p = r.nrows();
    let mut x = b.clone();
    for j in 0..p {
        for k in 0..j {
            let rkj = r[(k, j)];
            if rkj != 0.0 {
                for i in 0..x.nrows() {
                    x[(i, j)] -= x[(i, k)] * rkj;
                }
            }
        }
        let d = r[(j, j)];
        x.column_mut(j).unscale_mut(d);
    }
    x
}

/// Solves R x = b with R upper triangular.
pub fn solve_upper(r: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let p = r.nrows();
    let mut x = b.clone();
    for i in (0..p).rev() {
        let mut s = x[i];
        for k in (i + 1)..p {
            s -= r[(i, k)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Solves Rᵀ x = b with R upper triangular.
pub fn solve_upper_transpose(r: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let p = r.nrows();
    let mut x = b.clone();
    for i in 0..p {
        let mut s = x[i];
        for k in 0..i {
            s -= r[(k, i)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Two passes of Cholesky-QR; returns the orthonormal factor only.
pub fn cholesky_qr2(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cholesky_qr2_with_r(m).map(|(q, _)| q)
}

/// Two passes of Cholesky-QR, M = Q R with R = R₂R₁ upper triangular.
pub fn cholesky_qr2_with_r(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, p) = m.shape();
    if n < p {
        return Err(Error::DimensionMismatch(format!("cholesky_qr2 needs rows >= cols, got {n}x{p}")));
    }
    if p == 0 {
        return Ok((DMatrix::zeros(n, 0), DMatrix::zeros(0, 0)));
    }
    let tol = Tolerances::default().cholesky_pivot;
    let r1 = cholesky_upper(&(m.transpose() * m), tol)?;
    let q1 = right_solve_upper(m, &r1);
    let r2 = cholesky_upper(&(q1.transpose() * &q1), tol)?;
    let q = right_solve_upper(&q1, &r2);
    Ok((q, r2 * r1))
}

/// Thin SVD with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(m: &DMatrix<f64>) -> SortedSvd {
    let (n, p) = m.shape();
    let k = n.min(p);
    if k == 0 {
        return SortedSvd { u: DMatrix::zeros(n, 0), singular_values: vec![], v: DMatrix::zeros(p, 0) };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    SortedSvd {
        u: DMatrix::from_fn(n, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| svd.singular_values[j]).collect(),
        v: DMatrix::from_fn(p, k, |i, j| vt[(order[j], i)]),
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn sym_eig_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}
