use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numerics::{cholesky_qr2_with_r, cholesky_upper, qr_thin, solve_upper, solve_upper_transpose, Tolerances};
use crate::{Error, Result};

/// Which loss a gradient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    L1,
    L2,
    L2Stab,
}

/// Least-squares route for the stochastic loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsqPath {
    /// Normal equations AᵀA u = Aᵀy via Cholesky.
    Normal,
    /// Cholesky-QR2 factorization of A.
    Stabilized,
}

fn check_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!("ambient dims {} vs {}", a.nrows(), b.nrows())));
    }
    Ok(())
}

/// L1(A, B) = p − ‖Q_Bᵀ Q_A‖²_F.
pub fn loss_l1(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_rows(a, b)?;
    let (qa, _) = qr_thin(a)?;
    let (qb, _) = qr_thin(b)?;
    let c = qb.transpose() * qa;
    Ok((b.ncols() as f64 - c.norm_squared()).max(0.0))
}

/// Least-squares fit of y by the columns of A: returns (residual, coefficients).
fn lsq(a: &DMatrix<f64>, y: &DVector<f64>, path: LsqPath) -> Result<(DVector<f64>, DVector<f64>)> {
    let u = match path {
        LsqPath::Normal => {
            let r = cholesky_upper(&(a.transpose() * a), Tolerances::default().cholesky_pivot)?;
            solve_upper(&r, &solve_upper_transpose(&r, &(a.transpose() * y)))
        }
        LsqPath::Stabilized => {
            let (q, r) = match cholesky_qr2_with_r(a) {
                Ok(qr) => qr,
                Err(Error::RankDeficient(_)) => qr_thin(a)?,
                Err(e) => return Err(e),
            };
            solve_upper(&r, &(q.transpose() * y))
        }
    };
    Ok((y - a * &u, u))
}

fn target(b: &DMatrix<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    if z.len() != b.ncols() {
        return Err(Error::DimensionMismatch(format!("z has length {}, B has {} columns", z.len(), b.ncols())));
    }
    let (qb, _) = qr_thin(b)?;
    Ok(qb * z)
}

/// L2(A, B; z) = min_u ‖A u − Q_B z‖².
pub fn loss_l2_stoch(a: &DMatrix<f64>, b: &DMatrix<f64>, z: &DVector<f64>, path: LsqPath) -> Result<f64> {
    check_rows(a, b)?;
    let y = target(b, z)?;
    let (r, _) = lsq(a, &y, path)?;
    Ok(r.norm_squared())
}

/// Same as [`loss_l2_stoch`] with a precomputed target vector y = Q_B z.
pub fn loss_l2(a: &DMatrix<f64>, y: &DVector<f64>, path: LsqPath) -> Result<f64> {
    lsq(a, y, path).map(|(r, _)| r.norm_squared())
}

/// [`loss_l2_stoch`] for every column of `z` (p×N), factoring A once.
pub fn loss_l2_stoch_batch(a: &DMatrix<f64>, b: &DMatrix<f64>, z: &DMatrix<f64>, path: LsqPath) -> Result<Vec<f64>> {
    check_rows(a, b)?;
    if z.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!("z has {} rows, B has {} columns", z.nrows(), b.ncols())));
    }
    let (qb, _) = qr_thin(b)?;
    let y = qb * z;
    let u = match path {
        LsqPath::Normal => {
            let r = cholesky_upper(&(a.transpose() * a), Tolerances::default().cholesky_pivot)?;
            let rhs = a.transpose() * &y;
            let cols: Vec<DVector<f64>> =
                rhs.column_iter().map(|c| solve_upper(&r, &solve_upper_transpose(&r, &c.into_owned()))).collect();
            DMatrix::from_columns(&cols)
        }
        LsqPath::Stabilized => {
            let (q, r) = match cholesky_qr2_with_r(a) {
                Ok(qr) => qr,
                Err(Error::RankDeficient(_)) => qr_thin(a)?,
                Err(e) => return Err(e),
            };
            let rhs = q.transpose() * &y;
            let cols: Vec<DVector<f64>> = rhs.column_iter().map(|c| solve_upper(&r, &c.into_owned())).collect();
            DMatrix::from_columns(&cols)
        }
    };
    let resid = y - a * u;
    Ok(resid.column_iter().map(|c| c.norm_squared()).collect())
}

/// Analytic gradient of the chosen loss with respect to A. `z` is required
/// for the stochastic kinds and ignored for L1.
pub fn grad_loss(a: &DMatrix<f64>, b: &DMatrix<f64>, z: Option<&DVector<f64>>, kind: LossKind) -> Result<DMatrix<f64>> {
    check_rows(a, b)?;
    match kind {
        LossKind::L1 => {
            // −2 (I − P_A) P_B A G⁻¹ with A G⁻¹ = Q_A R⁻ᵀ.
            let (qa, ra) = qr_thin(a)?;
            let (qb, _) = qr_thin(b)?;
            let m = qb.transpose() * &qa;
            let pb_qa = &qb * &m;
            let x = &pb_qa - &qa * (qa.transpose() * &pb_qa);
            let k = a.ncols();
            let mut g = DMatrix::zeros(a.nrows(), k);
            for i in 0..a.nrows() {
                let row = DVector::from_iterator(k, x.row(i).iter().copied());
                let sol = solve_upper(&ra, &row);
                for j in 0..k {
                    g[(i, j)] = -2.0 * sol[j];
                }
            }
            Ok(g)
        }
        LossKind::L2 | LossKind::L2Stab => {
            let z = z.ok_or_else(|| Error::InvalidArgument("stochastic loss gradient needs z".into()))?;
            let path = if kind == LossKind::L2 { LsqPath::Normal } else { LsqPath::Stabilized };
            let y = target(b, z)?;
            let (r, u) = lsq(a, &y, path)?;
            Ok(&r * u.transpose() * -2.0)
        }
    }
}

/// min(‖v − u‖, ‖v + u‖).
pub fn loss_z2(v: &[f64], u: &[f64]) -> f64 {
    assert_eq!(v.len(), u.len(), "loss_z2 needs equal lengths");
    let minus: f64 = v.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
    let plus: f64 = v.iter().zip(u).map(|(a, b)| (a + b) * (a + b)).sum();
    minus.min(plus).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn projector(m: &DMatrix<f64>) -> DMatrix<f64> {
        let g = (m.transpose() * m).try_inverse().unwrap();
        m * g * m.transpose()
    }

    #[test]
    fn containment_and_orthogonal_lines() {
        let a = DMatrix::identity(3, 2);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(loss_l1(&a, &b).unwrap().abs() < 1e-15);
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!((loss_l1(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projector_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = randn(&mut rng, 50, 8);
        let b = randn(&mut rng, 50, 3);
        let oracle = 0.5 * (projector(&b) - projector(&a)).norm_squared() - 2.5;
        assert!((loss_l1(&a, &b).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn l2_simple_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = randn(&mut rng, 10, 3);
        let b = randn(&mut rng, 10, 2);
        assert_eq!(loss_l2_stoch(&a, &b, &DVector::zeros(2), LsqPath::Normal).unwrap(), 0.0);

        let a = DMatrix::identity(6, 2);
        let b = DMatrix::from_fn(6, 2, |i, j| if i == j + 3 { 1.0 } else { 0.0 });
        let z = DVector::from_vec(vec![0.7, -1.3]);
        for path in [LsqPath::Normal, LsqPath::Stabilized] {
            assert!((loss_l2_stoch(&a, &b, &z, path).unwrap() - z.norm_squared()).abs() < 1e-14);
        }
    }

    #[test]
    fn l2_matches_projector_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = randn(&mut rng, 30, 5);
        let b = randn(&mut rng, 30, 2);
        let z = DVector::from_vec(vec![0.3, 1.1]);
        let (qb, _) = qr_thin(&b).unwrap();
        let r = (DMatrix::identity(30, 30) - projector(&a)) * qb * &z;
        for path in [LsqPath::Normal, LsqPath::Stabilized] {
            assert!((loss_l2_stoch(&a, &b, &z, path).unwrap() - r.norm_squared()).abs() < 1e-9);
        }
    }

    #[test]
    fn ill_conditioned_stabilized() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (u, _) = qr_thin(&randn(&mut rng, 40, 4)).unwrap();
        let (v, _) = qr_thin(&randn(&mut rng, 4, 4)).unwrap();
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-3, 1e-5, 1e-8]));
        let a = u * s * v.transpose();
        let b = randn(&mut rng, 40, 2);
        let z = DVector::from_vec(vec![1.0, -0.5]);
        let l = loss_l2_stoch(&a, &b, &z, LsqPath::Stabilized).unwrap();
        assert!(l.is_finite() && l >= 0.0);
    }

    fn fd_check(kind: LossKind, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = randn(&mut rng, 20, 4);
        let a = &a / a.norm();
        let b = randn(&mut rng, 20, 2);
        let z = DVector::from_vec(vec![0.9, -1.4]);
        let f = |m: &DMatrix<f64>| match kind {
            LossKind::L1 => loss_l1(m, &b).unwrap(),
            LossKind::L2 => loss_l2_stoch(m, &b, &z, LsqPath::Normal).unwrap(),
            LossKind::L2Stab => loss_l2_stoch(m, &b, &z, LsqPath::Stabilized).unwrap(),
        };
        let g = grad_loss(&a, &b, Some(&z), kind).unwrap();
        let h = 1e-5;
        let mut fd = DMatrix::zeros(20, 4);
        for i in 0..20 {
            for j in 0..4 {
                let mut p = a.clone();
                p[(i, j)] += h;
                let mut m = a.clone();
                m[(i, j)] -= h;
                fd[(i, j)] = (f(&p) - f(&m)) / (2.0 * h);
            }
        }
        let rel = (&g - &fd).norm() / fd.norm();
        assert!(rel <= 1e-5, "{kind:?}: relative FD error {rel:e}");
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = randn(&mut rng, 25, 4);
        let b = randn(&mut rng, 25, 3);
        let z = randn(&mut rng, 3, 7);
        for path in [LsqPath::Normal, LsqPath::Stabilized] {
            let batch = loss_l2_stoch_batch(&a, &b, &z, path).unwrap();
            for (j, v) in batch.iter().enumerate() {
                let one = loss_l2_stoch(&a, &b, &z.column(j).into_owned(), path).unwrap();
                assert!((v - one).abs() <= 1e-12 * (1.0 + one));
            }
        }
        assert!(loss_l2_stoch_batch(&a, &b, &randn(&mut rng, 2, 3), LsqPath::Normal).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        fd_check(LossKind::L1, 21);
        fd_check(LossKind::L2, 22);
        fd_check(LossKind::L2Stab, 23);
    }

    #[test]
    fn gradient_vanishes_at_minimum_and_along_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let b = randn(&mut rng, 15, 2);
        let a = DMatrix::from_fn(15, 3, |i, j| if j < 2 { b[(i, j)] } else { rng.sample(StandardNormal) });
        assert!(grad_loss(&a, &b, None, LossKind::L1).unwrap().norm() < 1e-8);

        let a = randn(&mut rng, 15, 3);
        let gauge = randn(&mut rng, 3, 3);
        let g = grad_loss(&a, &b, None, LossKind::L1).unwrap();
        let dir = &a * gauge;
        assert!(g.dot(&dir).abs() < 1e-8);
    }

    #[test]
    fn z2_cases() {
        assert_eq!(loss_z2(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(loss_z2(&[1.0, 2.0], &[-1.0, -2.0]), 0.0);
        assert!((loss_z2(&[1.0, 0.0], &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
