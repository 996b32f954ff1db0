//! Proper orthogonal decomposition and the Galerkin reduced Burgers model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fields::FieldSample;
use crate::grassmann::OrthoBasis;
use crate::numerics::{cholesky_upper, solve_upper, solve_upper_transpose, svd_sorted};
use crate::problems::{advect, diffusion_operator, BurgersSpec, SnapshotMatrix};
use crate::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const POD_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RomSource {
    LocalPod,
    GlobalPod,
    Predicted,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomBasis {
    pub basis: OrthoBasis,
    pub source: RomSource,
}

/// Weighted snapshot matrix S·diag(√w).
fn weighted(s: &SnapshotMatrix) -> DMatrix<f64> {
    let mut y = s.values.clone();
    for (j, w) in s.weights.iter().enumerate() {
        y.column_mut(j).scale_mut(w.sqrt());
    }
    y
}

/// Singular values of the weighted snapshot matrix, descending.
pub fn pod_singular_values(s: &SnapshotMatrix) -> Vec<f64> {
    svd_sorted(&weighted(s)).singular_values.iter().cloned().collect()
}

/// Leading `m` left singular vectors of the weighted snapshots.
pub fn pod_basis(s: &SnapshotMatrix, m: usize) -> Result<RomBasis> {
    pod_from_weighted(&weighted(s), m, RomSource::LocalPod)
}

/// POD of several trajectories pooled into one snapshot matrix.
pub fn global_pod_basis(snaps: &[SnapshotMatrix], m: usize) -> Result<RomBasis> {
    let first = snaps.first().ok_or_else(|| Error::InvalidArgument("no snapshot matrices".into()))?;
    let n = first.space_dim();
    if snaps.iter().any(|s| s.space_dim() != n) {
        return Err(Error::DimensionMismatch("snapshot matrices differ in space dimension".into()));
    }
    let cols: Vec<DVector<f64>> =
        snaps.iter().flat_map(|s| weighted(s).column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect();
    pod_from_weighted(&DMatrix::from_columns(&cols), m, RomSource::GlobalPod)
}

fn pod_from_weighted(y: &DMatrix<f64>, m: usize, source: RomSource) -> Result<RomBasis> {
    let n = y.nrows();
    if m == 0 {
        return Ok(RomBasis { basis: OrthoBasis::empty(n), source });
    }
    let svd = svd_sorted(y);
    let s = &svd.singular_values;
    let rank = s.iter().take_while(|v| **v > POD_RANK_TOL * s[0]).count();
    if m > rank {
        return Err(Error::RankDeficient(format!("requested {m} POD modes, numerical rank is {rank}")));
    }
    let basis = OrthoBasis::new(svd.u.columns(0, m).into_owned())?;
    Ok(RomBasis { basis, source })
}

/// Weighted squared reconstruction error Σ_j w_j ‖s_j − VVᵀs_j‖².
pub fn pod_reconstruction_error(s: &SnapshotMatrix, basis: &OrthoBasis) -> f64 {
    let y = weighted(s);
    let v = basis.matrix();
    let resid = &y - v * (v.transpose() * &y);
    resid.norm_squared()
}

/// Galerkin reduced Burgers model. Each step lifts the reduced state, applies
/// the full explicit advection, projects back and solves the reduced implicit
/// diffusion system. Returns the lifted trajectory at every stored level.
pub fn pod_rom_integrate(
    nu: &FieldSample,
    u0: &FieldSample,
    basis: &RomBasis,
    spec: &BurgersSpec,
) -> Result<SnapshotMatrix> {
    if spec.nt < 2 || !(spec.t_final > 0.0) {
        return Err(Error::InvalidArgument("need nt >= 2 and T > 0".into()));
    }
    let k = diffusion_operator(nu)?;
    let v = basis.basis.matrix();
    if v.nrows() != k.dim() || u0.grid != nu.grid {
        return Err(Error::DimensionMismatch("basis, nu and u0 must share the grid".into()));
    }
    let dt = spec.dt();
    let dx = nu.grid.spacing(0);
    let r = v.ncols();
    let kv = k.mul_dense(v);
    let mut m = DMatrix::identity(r, r) + (v.transpose() * kv) * dt;
    m = (&m + m.transpose()) * 0.5;
    let chol = if r > 0 { Some(cholesky_upper(&m, 1e-15)?) } else { None };
    let mut a = v.transpose() * DVector::from_column_slice(&u0.values);
    let mut values = DMatrix::zeros(k.dim(), spec.nt);
    values.set_column(0, &(v * &a));
    for s in 1..spec.nt {
        let u = v * &a;
        let star = v.transpose() * advect(&u, dt, dx)?;
        a = match &chol {
            Some(c) => solve_upper(c, &solve_upper_transpose(c, &star)),
            None => star,
        };
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState(s as f64 * dt));
        }
        values.set_column(s, &(v * &a));
    }
    SnapshotMatrix::new(values, spec.weights())
}

/// Relative weighted trajectory error ‖U − U_ref‖/‖U_ref‖.
pub fn relative_trajectory_error(approx: &SnapshotMatrix, reference: &SnapshotMatrix) -> f64 {
    let num = weighted(&SnapshotMatrix { values: &approx.values - &reference.values, weights: reference.weights.clone() });
    let den = weighted(reference).norm();
    if den == 0.0 {
        return if num.norm() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num.norm() / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::fields::{grf_sample, GridSpec, GrfSpec};
    use crate::problems::{burgers_integrate, viscosity_from_field};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_snapshots(n: usize, k: usize, seed: u64) -> SnapshotMatrix {
        let mut rng = stream_rng(seed, 0);
        let values = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let weights = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
        SnapshotMatrix::new(values, weights).unwrap()
    }

    #[test]
    fn eckart_young_tail() {
        let s = random_snapshots(30, 12, 1);
        let sv = pod_singular_values(&s);
        let b = pod_basis(&s, 3).unwrap();
        let tail: f64 = sv[3..].iter().map(|x| x * x).sum();
        assert!((pod_reconstruction_error(&s, &b.basis) - tail).abs() < 1e-10 * tail.max(1.0));
    }

    #[test]
    fn empty_and_exact_rank() {
        let s = random_snapshots(20, 6, 2);
        let e = pod_basis(&s, 0).unwrap();
        assert_eq!(e.basis.dim(), 0);
        let total = weighted(&s).norm_squared();
        assert!((pod_reconstruction_error(&s, &e.basis) - total).abs() < 1e-12 * total);

        let low = SnapshotMatrix::new(s.values.columns(0, 2).into_owned() * DMatrix::from_fn(2, 8, |i, j| (i + j) as f64 + 1.0), vec![1.0; 8]).unwrap();
        let b = pod_basis(&low, 2).unwrap();
        assert!(pod_reconstruction_error(&low, &b.basis) < 1e-20 * weighted(&low).norm_squared().max(1.0) + 1e-20);
        assert!(matches!(pod_basis(&low, 3), Err(Error::RankDeficient(_))));
    }

    fn sample(seed: u64) -> (FieldSample, FieldSample) {
        let g = GridSpec::unit(1, 128);
        let mut rng = stream_rng(seed, 0);
        let psi = grf_sample(&g, &GrfSpec { gamma: 40.0, r: 4.0, normalize: true }, &mut rng);
        let u0 = grf_sample(&g, &GrfSpec { gamma: 10.0, r: 2.0, normalize: true }, &mut rng);
        (viscosity_from_field(&psi, 5e-3, 30.0, 0.05), u0)
    }

    #[test]
    fn full_basis_reproduces_integrator() {
        let (nu, u0) = sample(3);
        let spec = BurgersSpec::default();
        let full = burgers_integrate(&nu, &u0, &spec).unwrap();
        let id = RomBasis { basis: OrthoBasis::coordinate(128, 128), source: RomSource::Oracle };
        let rom = pod_rom_integrate(&nu, &u0, &id, &spec).unwrap();
        assert!((&rom.values - &full.values).abs().max() < 1e-12);
    }

    #[test]
    fn local_pod_error_small_and_monotone() {
        let (nu, u0) = sample(5);
        let spec = BurgersSpec::default();
        let full = burgers_integrate(&nu, &u0, &spec).unwrap();
        let mut last = f64::INFINITY;
        for m in [5, 10, 20, 30] {
            let b = pod_basis(&full, m).unwrap();
            let err = relative_trajectory_error(&pod_rom_integrate(&nu, &u0, &b, &spec).unwrap(), &full);
            assert!(err <= last * (1.0 + 1e-9), "m={m}: {err} > {last}");
            last = err;
        }
        assert!(last <= 0.025, "{last}");
    }

    #[test]
    fn orthogonal_basis_gives_zero_trajectory() {
        let g = GridSpec::unit(1, 16);
        let u0 = FieldSample::from_fn(g.clone(), |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        // Basis vectors supported where u0 vanishes.
        let m = DMatrix::from_fn(16, 2, |i, j| if i == 12 + j { 1.0 } else { 0.0 });
        let b = RomBasis { basis: OrthoBasis::new(m).unwrap(), source: RomSource::Predicted };
        let rom = pod_rom_integrate(&FieldSample::constant(g, 0.1), &u0, &b, &BurgersSpec::default()).unwrap();
        assert!(rom.values.iter().all(|v| *v == 0.0));
    }
}
