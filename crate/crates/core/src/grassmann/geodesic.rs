use nalgebra::DMatrix;

use super::{OrthoBasis, TangentVector};
use crate::numerics::svd_sorted;
use crate::{Error, Result};

/// Smallest admissible singular value of U0ᵀU1 for the logarithm.
pub const CUT_LOCUS_TOL: f64 = 1e-10;

/// Tangent Δ at U0 with exp(U0, Δ, 1) spanning the same subspace as U1.
pub fn grassmann_log(u0: &OrthoBasis, u1: &OrthoBasis) -> Result<TangentVector> {
    if u0.matrix().shape() != u1.matrix().shape() {
        return Err(Error::DimensionMismatch(format!("log between {:?} and {:?}", u0.matrix().shape(), u1.matrix().shape())));
    }
    let (a, b) = (u0.matrix(), u1.matrix());
    let p = a.ncols();
    if p == 0 {
        return Ok(TangentVector::zero(u0.clone()));
    }
    let m = a.transpose() * b;
    let smin = svd_sorted(&m).singular_values.last().copied().unwrap_or(0.0);
    if smin < CUT_LOCUS_TOL {
        return Err(Error::CutLocus(smin));
    }
    let minv = m.try_inverse().ok_or(Error::CutLocus(smin))?;
    let l = (b - a * (a.transpose() * b)) * minv;
    let s = svd_sorted(&l);
    let atan = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p, s.singular_values.iter().map(|x| x.atan())));
    let delta = &s.u * atan * s.v.transpose();
    let delta = &delta - a * (a.transpose() * &delta);
    Ok(TangentVector::new_unchecked(u0.clone(), delta))
}

/// Point at time `t` on the geodesic from the base of `delta` with velocity Δ.
pub fn grassmann_exp(delta: &TangentVector, t: f64) -> OrthoBasis {
    let u0 = delta.base().matrix();
    let p = u0.ncols();
    if p == 0 || delta.norm() == 0.0 || t == 0.0 {
        return delta.base().clone();
    }
    let s = svd_sorted(delta.delta());
    let cos = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p, s.singular_values.iter().map(|x| (x * t).cos())));
    let sin = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p, s.singular_values.iter().map(|x| (x * t).sin())));
    let vt = s.v.transpose();
    OrthoBasis::new_unchecked(u0 * &s.v * cos * &vt + &s.u * sin * vt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::principal_angles;
    use crate::numerics::orthonormality_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_basis(rng: &mut ChaCha8Rng, n: usize, p: usize) -> OrthoBasis {
        OrthoBasis::orthonormalize(&DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))).unwrap()
    }

    #[test]
    fn log_of_same_subspace_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u0 = random_basis(&mut rng, 12, 3);
        assert!(grassmann_log(&u0, &u0).unwrap().norm() < 1e-14);
        let g = random_basis(&mut rng, 3, 3);
        let u1 = OrthoBasis::new(u0.matrix() * g.matrix()).unwrap();
        assert!(grassmann_log(&u0, &u1).unwrap().norm() < 1e-13);
    }

    #[test]
    fn exp_log_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let u0 = random_basis(&mut rng, 30, 4);
            let u1 = random_basis(&mut rng, 30, 4);
            let d = grassmann_log(&u0, &u1).unwrap();
            let e = grassmann_exp(&d, 1.0);
            assert!(orthonormality_error(e.matrix()) < 1e-10);
            let worst = principal_angles(&e, &u1).unwrap().max();
            assert!(worst <= 1e-8, "{worst:e}");
        }
    }

    #[test]
    fn cut_locus_detected() {
        let u0 = OrthoBasis::coordinate(4, 1);
        let u1 = OrthoBasis::new(DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(grassmann_log(&u0, &u1), Err(Error::CutLocus(_))));
    }

    #[test]
    fn trivial_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u0 = random_basis(&mut rng, 10, 2);
        let z = TangentVector::zero(u0.clone());
        assert_eq!(grassmann_exp(&z, 0.7), u0);
        let d = TangentVector::project(u0.clone(), &DMatrix::from_fn(10, 2, |_, _| rng.sample(StandardNormal))).unwrap();
        assert_eq!(grassmann_exp(&d, 0.0), u0);
    }

    #[test]
    fn constant_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let u0 = random_basis(&mut rng, 10, 3);
        let d = TangentVector::project(u0.clone(), &DMatrix::from_fn(10, 3, |_, _| rng.sample(StandardNormal))).unwrap();
        let h = 1e-5;
        let speed = |t: f64| {
            let a = grassmann_exp(&d, t + h).projector();
            let b = grassmann_exp(&d, t - h).projector();
            // ‖Ṗ‖_F² = 2‖Δ‖_F².
            ((a - b) / (2.0 * h)).norm() / 2f64.sqrt()
        };
        for t in [0.0, 0.3, 0.7] {
            assert!((speed(t) - d.norm()).abs() < 1e-6, "t={t}");
        }
    }
}
