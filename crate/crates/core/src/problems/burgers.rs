//! Viscous Burgers equation u_t + (u²/2)_x = (ν u_x)_x on a Dirichlet grid.
//!
//! One step is explicit Rusanov advection followed by a backward-Euler
//! diffusion solve. The advective update is stable for max|u|·Δt/Δx ≤ 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fields::FieldSample;
use crate::numerics::{BandCholesky, SparseOperator};
use crate::problems::assemble_elliptic;
use crate::{Error, Result};

/// Snapshots stored column-per-time-level with positive quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMatrix {
    pub values: DMatrix<f64>,
    pub weights: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn new(values: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} snapshots", weights.len(), values.ncols())));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("snapshot weights must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("snapshot matrix has non-finite entries".into()));
        }
        Ok(Self { values, weights })
    }

    pub fn space_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.values.ncols()
    }
}

/// Time grid and resolution of a Burgers run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersSpec {
    /// Number of stored time levels, t = 0 included.
    pub nt: usize,
    pub t_final: f64,
}

impl Default for BurgersSpec {
    fn default() -> Self {
        Self { nt: 64, t_final: 0.1 }
    }
}

impl BurgersSpec {
    pub fn dt(&self) -> f64 {
        self.t_final / (self.nt - 1) as f64
    }

    /// Trapezoidal weights of the stored time levels.
    pub fn weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.nt).map(|i| if i == 0 || i + 1 == self.nt { 0.5 * dt } else { dt }).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.nt < 2 || !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("need nt >= 2 and T > 0, got nt={} T={}", self.nt, self.t_final)));
        }
        Ok(())
    }
}

/// Courant number max|u|·Δt/Δx.
pub fn cfl_number(u: &[f64], dt: f64, dx: f64) -> f64 {
    u.iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt / dx
}

/// Explicit Rusanov update u − Δt ∂x(u²/2) with zero boundary values.
pub fn advect(u: &DVector<f64>, dt: f64, dx: f64) -> Result<DVector<f64>> {
    let c = cfl_number(u.as_slice(), dt, dx);
    if !c.is_finite() {
        return Err(Error::NonFiniteState(f64::NAN));
    }
    if c > 1.0 {
        return Err(Error::CflViolation(c));
    }
    let n = u.len();
    let at = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { u[i as usize] };
    // Flux through the face between nodes i−1 and i, for i = 0..=n.
    let flux: Vec<f64> = (0..=n as isize)
        .map(|i| {
            let (l, r) = (at(i - 1), at(i));
            0.25 * (l * l + r * r) - 0.5 * l.abs().max(r.abs()) * (r - l)
        })
        .collect();
    Ok(DVector::from_fn(n, |i, _| u[i] - dt / dx * (flux[i + 1] - flux[i])))
}

/// Diffusion operator −∂x ν ∂x for the viscosity field `nu`.
pub fn diffusion_operator(nu: &FieldSample) -> Result<SparseOperator> {
    if nu.grid.dim() != 1 {
        return Err(Error::DimensionMismatch(format!("Burgers needs a 1-D grid, got {}-D", nu.grid.dim())));
    }
    assemble_elliptic(std::slice::from_ref(nu))
}

/// Integrates from `u0` and returns the snapshots at all `spec.nt` levels.
pub fn burgers_integrate(nu: &FieldSample, u0: &FieldSample, spec: &BurgersSpec) -> Result<SnapshotMatrix> {
    spec.validate()?;
    if u0.grid != nu.grid {
        return Err(Error::DimensionMismatch("u0 and nu live on different grids".into()));
    }
    let k = diffusion_operator(nu)?;
    let dt = spec.dt();
    let dx = nu.grid.spacing(0);
    let implicit = SparseOperator::diagonal(&vec![1.0; k.dim()]).add_scaled(dt, &k)?;
    let chol = BandCholesky::factor(&implicit)?;
    let mut u = DVector::from_column_slice(&u0.values);
    let mut values = DMatrix::zeros(k.dim(), spec.nt);
    values.set_column(0, &u);
    for s in 1..spec.nt {
        let mut next = advect(&u, dt, dx)?;
        chol.solve_in_place(next.as_mut_slice());
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(s as f64 * dt));
        }
        values.set_column(s, &next);
        u = next;
    }
    SnapshotMatrix::new(values, spec.weights())
}

/// Viscosity ν = ν₀ + (1 + tanh(sψ))·c.
pub fn viscosity_from_field(psi: &FieldSample, nu0: f64, s: f64, c: f64) -> FieldSample {
    psi.map(|p| nu0 + (1.0 + (s * p).tanh()) * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::fields::{grf_sample, GridSpec, GrfSpec};
    use std::f64::consts::PI;

    fn energy(u: nalgebra::DVectorView<f64>) -> f64 {
        0.5 * u.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn zero_initial_condition_stays_zero() {
        let g = GridSpec::unit(1, 32);
        let s = burgers_integrate(&FieldSample::constant(g.clone(), 0.1), &FieldSample::constant(g, 0.0), &BurgersSpec::default())
            .unwrap();
        assert_eq!(s.n_snapshots(), 64);
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn heat_limit_decay() {
        let g = GridSpec::unit(1, 128);
        let nu = 0.5;
        let amp = 1e-4;
        let u0 = FieldSample::from_fn(g.clone(), |x| amp * (PI * x[0]).sin());
        let spec = BurgersSpec { nt: 201, t_final: 0.1 };
        let s = burgers_integrate(&FieldSample::constant(g.clone(), nu), &u0, &spec).unwrap();
        let mode: Vec<f64> = (0..128).map(|j| (PI * g.coord(0, j)).sin()).collect();
        let norm2: f64 = mode.iter().map(|v| v * v).sum();
        for (i, t) in [(100, 0.05), (200, 0.1)] {
            let c: f64 = s.values.column(i).iter().zip(&mode).map(|(a, b)| a * b).sum::<f64>() / norm2 / amp;
            let exact = (-nu * PI * PI * t).exp();
            assert!((c / exact - 1.0).abs() < 0.05, "t={t}: {c} vs {exact}");
        }
    }

    #[test]
    fn energy_non_increasing_on_recipe() {
        let g = GridSpec::unit(1, 128);
        for seed in 0..4 {
            let mut rng = stream_rng(seed, 0);
            let psi = grf_sample(&g, &GrfSpec { gamma: 40.0, r: 4.0, normalize: true }, &mut rng);
            let nu = viscosity_from_field(&psi, 5e-3, 30.0, 0.05);
            let u0 = grf_sample(&g, &GrfSpec { gamma: 10.0, r: 2.0, normalize: true }, &mut rng);
            let s = burgers_integrate(&nu, &u0, &BurgersSpec::default()).unwrap();
            for t in 1..s.n_snapshots() {
                assert!(energy(s.values.column(t)) <= energy(s.values.column(t - 1)) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cfl_violation_detected() {
        let g = GridSpec::unit(1, 64);
        let u0 = FieldSample::from_fn(g.clone(), |x| 100.0 * (PI * x[0]).sin());
        let r = burgers_integrate(&FieldSample::constant(g, 0.01), &u0, &BurgersSpec::default());
        assert!(matches!(r, Err(Error::CflViolation(c)) if c > 1.0));
    }

    fn solve_at(n: usize, nt: usize) -> Vec<f64> {
        let g = GridSpec::unit(1, n);
        let nu = FieldSample::from_fn(g.clone(), |x| 0.02 + 0.01 * (3.0 * x[0]).sin());
        let u0 = FieldSample::from_fn(g, |x| (PI * x[0]).sin() + 0.5 * (2.0 * PI * x[0]).sin());
        let s = burgers_integrate(&nu, &u0, &BurgersSpec { nt, t_final: 0.2 }).unwrap();
        s.values.column(nt - 1).iter().cloned().collect()
    }

    #[test]
    fn first_order_convergence() {
        // Interior grids n, 2n+1, ... share nodes; compare on the coarsest.
        let reference = solve_at(32 * 64 - 1, 64 * 32 + 1);
        let err = |n: usize, nt: usize| {
            let u = solve_at(n, nt);
            let stride = (32 * 64) / (n + 1);
            u.iter().enumerate().map(|(j, v)| (v - reference[(j + 1) * stride - 1]).powi(2)).sum::<f64>().sqrt()
                / ((n + 1) as f64).sqrt()
        };
        let e1 = err(63, 33);
        let e2 = err(127, 65);
        assert!(e1 / e2 >= 1.8, "{e1} / {e2}");
    }
}
