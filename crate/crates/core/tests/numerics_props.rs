use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use subreg_core::eigencount::{count_products_leq, tau_sum, upper_bound};
use subreg_core::fields::{contrast_map, grf_sample, ContrastSpec, GridSpec, GrfSpec};
use subreg_core::numerics::{cholesky_qr2, qr_thin, solve_lyapunov};
use subreg_core::problems::assemble_elliptic;

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_qr2_matches_householder_span(seed in any::<u64>(), n in 10usize..60, p in 1usize..8, decades in 0.0f64..5.5) {
        prop_assume!(p <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DVector::from_fn(p, |i, _| 10f64.powf(-decades * i as f64 / p.max(2) as f64));
        let m = randn(&mut rng, n, p) * DMatrix::from_diagonal(&d);
        let s = m.singular_values();
        prop_assume!(s.max() / s.min() < 1e6);
        let q = cholesky_qr2(&m).unwrap();
        let (h, _) = qr_thin(&m).unwrap();
        prop_assert!((q.transpose() * &q - DMatrix::identity(p, p)).norm() <= 1e-12);
        // Largest principal-angle sine between the two column spaces.
        let resid = &h - &q * (q.transpose() * &h);
        prop_assert!(resid.norm() <= 1e-9);
    }

    #[test]
    fn lyapunov_solution_is_symmetric(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = randn(&mut rng, n, n) / (n as f64).sqrt() - DMatrix::identity(n, n) * 2.5;
        let b = randn(&mut rng, n, 2);
        let q = &b * b.transpose();
        let x = solve_lyapunov(&a, &q).unwrap();
        prop_assert!((&x - x.transpose()).norm() <= 1e-12 * x.norm());
        prop_assert!((&a * &x + &x * a.transpose() + &q).norm() <= 1e-10 * q.norm());
    }

    #[test]
    fn counting_identity_and_bound(k in 1u64..400, d in 1u32..7) {
        prop_assert_eq!(count_products_leq(k, d), tau_sum(k, d));
        if d >= 2 {
            prop_assert!(count_products_leq(k, d).to_f64().unwrap() <= upper_bound(k, d) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn contrast_map_stays_in_range(seed in any::<u64>(), alpha in 0.1f64..5.0, span in 0.5f64..100.0, s in -3.0f64..3.0) {
        let grid = GridSpec::unit(2, 12);
        let psi = grf_sample(&grid, &GrfSpec { gamma: 1.0, r: 2.0, normalize: true }, &mut ChaCha8Rng::seed_from_u64(seed));
        let beta = alpha + span;
        let a = contrast_map(&psi, &ContrastSpec { alpha, beta, s }).unwrap();
        prop_assert!(a.values.iter().all(|v| *v >= alpha && *v <= beta));
        prop_assert!(a.max() / a.min() <= beta / alpha * (1.0 + 1e-12));
    }

    #[test]
    fn elliptic_operator_is_spd(seed in any::<u64>(), n in 3usize..12) {
        let grid = GridSpec::unit(2, n);
        let psi = grf_sample(&grid, &GrfSpec { gamma: 1.0, r: 2.0, normalize: true }, &mut ChaCha8Rng::seed_from_u64(seed));
        let k = contrast_map(&psi, &ContrastSpec::ELLIPTIC_2D).unwrap();
        let a = assemble_elliptic(&[k]).unwrap();
        prop_assert!(a.is_symmetric(1e-14));
        prop_assert!(a.to_dense().cholesky().is_some());
    }
}
