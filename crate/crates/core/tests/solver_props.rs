use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use subreg_core::grassmann::OrthoBasis;
use subreg_core::numerics::{sym_eig_dense, SparseOperator};
use subreg_core::solvers::{balanced_truncation, cg, deflated_cg, two_grid_apply, two_grid_rho};

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Random SPD operator: 1-D Laplacian plus a positive diagonal.
fn operator(rng: &mut ChaCha8Rng, n: usize) -> SparseOperator {
    let h = 1.0 / (n + 1) as f64;
    let mut t = Vec::new();
    for i in 0..n {
        let shift: f64 = StandardNormal.sample(rng);
        t.push((i, i, 2.0 / (h * h) + 10.0 * shift.abs()));
        if i + 1 < n {
            t.push((i, i + 1, -1.0 / (h * h)));
            t.push((i + 1, i, -1.0 / (h * h)));
        }
    }
    SparseOperator::from_triplets(n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deflated_residual_orthogonal_to_coarse_space(seed in any::<u64>(), n in 20usize..80, m in 1usize..8, tol_exp in 2i32..11) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = operator(&mut rng, n);
        let b = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let v = OrthoBasis::orthonormalize(&randn(&mut rng, n, m)).unwrap();
        let vm = v.matrix();
        let x0 = vm * (vm.transpose() * a.mul_dense(vm)).lu().solve(&(vm.transpose() * &b)).unwrap();
        let r0 = (&b - a.matvec(&x0)).norm();
        let tol = 10f64.powi(-tol_exp);
        let (x, rep) = deflated_cg(&a, &b, &v, tol, 10 * n).unwrap();
        prop_assert!((vm.transpose() * (&b - a.matvec(&x))).norm() <= 1e-8 * r0);
        prop_assert!(*rep.residuals.last().unwrap() <= tol);
        prop_assert!(rep.residuals.iter().all(|r| r.is_finite() && *r >= 0.0));
    }

    #[test]
    fn exact_eigenvectors_never_slow_cg(seed in any::<u64>(), n in 30usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = operator(&mut rng, n);
        let b = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let e = sym_eig_dense(&a.to_dense());
        let plain = cg(&a, &b, 1e-10, 10 * n).unwrap().1.iterations;
        let v = OrthoBasis::new(e.vectors.columns(0, 5).into_owned()).unwrap();
        let deflated = deflated_cg(&a, &b, &v, 1e-10, 10 * n).unwrap().1.iterations;
        prop_assert!(deflated <= plain);
    }

    #[test]
    fn two_grid_fixed_point_and_contraction(seed in any::<u64>(), n in 10usize..40, m in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = operator(&mut rng, n);
        let v = if m == 0 { OrthoBasis::empty(n) } else { OrthoBasis::orthonormalize(&randn(&mut rng, n, m)).unwrap() };
        let x = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let y = two_grid_apply(&a, &v, 0.9, &a.matvec(&x), &x).unwrap();
        prop_assert!((y - &x).norm() <= 1e-11 * x.norm());
        let rho = two_grid_rho(&a, &v, 0.9, 200).unwrap();
        prop_assert!((0.0..1.0).contains(&rho));
    }

    #[test]
    fn hankel_values_invariant_under_similarity(seed in any::<u64>(), n in 3usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = randn(&mut rng, n, n) / (n as f64).sqrt() - DMatrix::identity(n, n) * 3.0;
        let b = randn(&mut rng, n, n);
        let c = randn(&mut rng, n, n);
        let t = randn(&mut rng, n, n) * 0.3 + DMatrix::identity(n, n);
        let ti = t.clone().try_inverse().unwrap();
        let h0 = balanced_truncation(&a, &b, &c, n).unwrap().hankel;
        let h1 = balanced_truncation(&(&ti * &a * &t), &(&ti * &b), &(&c * &t), n).unwrap().hankel;
        for (x, y) in h0.iter().zip(&h1) {
            prop_assert!((x - y).abs() <= 1e-8 * h0[0]);
        }
        prop_assert!(h0.windows(2).all(|w| w[0] >= w[1]));
    }
}
