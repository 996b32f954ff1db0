//! Finite-horizon LQR for the forced heat system, full or Galerkin-reduced.
//!
//! State x' = Ax + Gζ + Wu with a constant forcing vector ζ, cost
//! J = ½ x(T)ᵀΨΨᵀx(T) + λ/2 ∫ uᵀu dt. With the value function
//! ½xᵀC₁₁x + xᵀC₁₂ζ + …, in backward time τ = T − t:
//!   dC₁₁/dτ = C₁₁A + AᵀC₁₁ − λ⁻¹C₁₁WWᵀC₁₁,       C₁₁(T) = ΨΨᵀ,
//!   dC₁₂/dτ = AᵀC₁₂ + C₁₁G − λ⁻¹C₁₁WWᵀC₁₂,       C₁₂(T) = 0,
//! and u = −λ⁻¹Wᵀ(C₁₁x + C₁₂ζ). The full system has G = −I, ζ = b; the
//! reduced one has A_r = VᵀAV, G = −Vᵀb̂, ζ = ‖b‖.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grassmann::OrthoBasis;
use crate::problems::HeatControlSystem;
use crate::{Error, Result};

/// RK4 step size times the stiffness estimate stays below this value.
pub const RK4_STABILITY: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrSpec {
    pub lambda: f64,
    pub t_final: f64,
    /// Requested number of forward steps; raised automatically for stability.
    pub steps: usize,
}

impl Default for LqrSpec {
    fn default() -> Self {
        Self { lambda: 1e-3, t_final: 5.0, steps: 200 }
    }
}

/// Trajectories of one controlled run, lifted to the full state space.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrOutcome {
    pub times: Vec<f64>,
    /// Control at every time level, one column per level.
    pub controls: DMatrix<f64>,
    /// Full state φ at every time level, one column per level.
    pub states: DMatrix<f64>,
    pub cost: f64,
}

impl LqrOutcome {
    pub fn terminal_state(&self) -> DVector<f64> {
        self.states.column(self.states.ncols() - 1).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrReport {
    pub outcome: LqrOutcome,
    /// ‖φ(T) − φ_ref(T)‖ / ‖φ_ref(T)‖.
    pub e_s: f64,
    /// ‖Ψᵀ(φ(T) − φ_ref(T))‖ / ‖Ψᵀφ_ref(T)‖, 0 when both vanish.
    pub e_o: f64,
}

/// Linear system with constant forcing in (possibly reduced) coordinates.
struct ForcedLti {
    a: DMatrix<f64>,
    g: DMatrix<f64>,
    zeta: DVector<f64>,
    w: DMatrix<f64>,
    psi: DMatrix<f64>,
    x0: DVector<f64>,
    /// Lift to the full state space; `None` for the identity.
    lift: Option<DMatrix<f64>>,
}

impl ForcedLti {
    fn full(sys: &HeatControlSystem) -> Self {
        let n = sys.state_dim();
        Self {
            a: sys.a.clone(),
            g: -DMatrix::identity(n, n),
            zeta: sys.b.clone(),
            w: sys.w.clone(),
            psi: sys.psi.clone(),
            x0: sys.phi0.clone(),
            lift: None,
        }
    }

    fn reduced(sys: &HeatControlSystem, basis: &OrthoBasis) -> Result<Self> {
        let v = basis.matrix();
        if v.nrows() != sys.state_dim() {
            return Err(Error::DimensionMismatch(format!("basis has {} rows, state {}", v.nrows(), sys.state_dim())));
        }
        let vt = v.transpose();
        let bn = sys.b.norm();
        let g = if bn > 0.0 { -(&vt * &sys.b) / bn } else { DVector::zeros(v.ncols()) };
        Ok(Self {
            a: &vt * &sys.a * v,
            g: DMatrix::from_column_slice(v.ncols(), 1, g.as_slice()),
            zeta: DVector::from_element(1, bn),
            w: &vt * &sys.w,
            psi: &vt * &sys.psi,
            x0: &vt * &sys.phi0,
            lift: Some(v.clone()),
        })
    }

    fn stiffness(&self, lambda: f64) -> f64 {
        let gersh = self.a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        let wn = self.w.norm();
        let pn = self.psi.norm();
        gersh + wn * wn * pn * pn / lambda
    }

    fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.lift {
            Some(v) => v * x,
            None => x.clone(),
        }
    }
}

fn rk4_matrix<F: Fn(&DMatrix<f64>) -> DMatrix<f64>>(f: &F, y: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let k1 = f(y);
    let k2 = f(&(y + &k1 * (0.5 * h)));
    let k3 = f(&(y + &k2 * (0.5 * h)));
    let k4 = f(&(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Feedback gains (K, k) with u = −(Kx + k) at 2N + 1 equally spaced times.
fn riccati_gains(sys: &ForcedLti, lambda: f64, t_final: f64, n_half: usize) -> Result<Vec<(DMatrix<f64>, DVector<f64>)>> {
    let r = sys.a.nrows();
    let wwt = &sys.w * sys.w.transpose() / lambda;
    let gz = &sys.g * &sys.zeta;
    // Joint state [C₁₁ | c₁₂] with c₁₂ = C₁₂ζ, which obeys the same linear equation.
    let rhs = |y: &DMatrix<f64>| {
        let c11 = y.columns(0, r);
        let c12 = y.column(r);
        let c11w = c11 * &wwt;
        let d11 = c11 * &sys.a + sys.a.transpose() * c11 - &c11w * c11;
        let d12 = sys.a.transpose() * c12 + c11 * &gz - &c11w * c12;
        let mut out = DMatrix::zeros(r, r + 1);
        out.columns_mut(0, r).copy_from(&d11);
        out.column_mut(r).copy_from(&d12);
        out
    };
    let mut y = DMatrix::zeros(r, r + 1);
    y.columns_mut(0, r).copy_from(&(&sys.psi * sys.psi.transpose()));
    let h = t_final / n_half as f64;
    let gain = |y: &DMatrix<f64>| {
        let wt = sys.w.transpose() / lambda;
        (&wt * y.columns(0, r), &wt * y.column(r))
    };
    let mut gains = Vec::with_capacity(n_half + 1);
    gains.push(gain(&y));
    for s in 0..n_half {
        y = rk4_matrix(&rhs, &y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(t_final - (s + 1) as f64 * h));
        }
        gains.push(gain(&y));
    }
    // Stored in backward time; flip to forward order.
    gains.reverse();
    Ok(gains)
}

fn forward(
    sys: &ForcedLti,
    lambda: f64,
    t_final: f64,
    steps: usize,
    gains: Option<&[(DMatrix<f64>, DVector<f64>)]>,
) -> Result<LqrOutcome> {
    let h = t_final / steps as f64;
    let m = sys.w.ncols();
    let gz = &sys.g * &sys.zeta;
    let control = |j: usize, x: &DVector<f64>| match gains {
        Some(g) => -(&g[j].0 * x + &g[j].1),
        None => DVector::zeros(m),
    };
    let f = |j: usize, x: &DVector<f64>| &sys.a * x + &gz + &sys.w * control(j, x);
    let mut x = sys.x0.clone();
    let n_full = sys.lift(&x).len();
    let mut states = DMatrix::zeros(n_full, steps + 1);
    let mut controls = DMatrix::zeros(m, steps + 1);
    states.set_column(0, &sys.lift(&x));
    controls.set_column(0, &control(0, &x));
    for i in 0..steps {
        let k1 = f(2 * i, &x);
        let k2 = f(2 * i + 1, &(&x + &k1 * (0.5 * h)));
        let k3 = f(2 * i + 1, &(&x + &k2 * (0.5 * h)));
        let k4 = f(2 * i + 2, &(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState((i + 1) as f64 * h));
        }
        states.set_column(i + 1, &sys.lift(&x));
        controls.set_column(i + 1, &control(2 * i + 2, &x));
    }
    let y_t = sys.psi.transpose() * &x;
    let mut effort = 0.0;
    for j in 0..=steps {
        let wgt = if j == 0 || j == steps { 0.5 } else { 1.0 };
        effort += wgt * controls.column(j).norm_squared();
    }
    let cost = 0.5 * y_t.norm_squared() + 0.5 * lambda * effort * h;
    let times = (0..=steps).map(|j| j as f64 * h).collect();
    Ok(LqrOutcome { times, controls, states, cost })
}

fn validate(spec: &LqrSpec) -> Result<()> {
    if !(spec.lambda > 0.0) || !(spec.t_final > 0.0) || spec.steps == 0 {
        return Err(Error::InvalidArgument(format!("need lambda > 0, T > 0, steps > 0, got {spec:?}")));
    }
    Ok(())
}

fn steps_for(sys: &ForcedLti, spec: &LqrSpec) -> usize {
    let needed = (spec.t_final * sys.stiffness(spec.lambda) / RK4_STABILITY).ceil() as usize;
    spec.steps.max(needed)
}

fn run(sys: &ForcedLti, spec: &LqrSpec) -> Result<LqrOutcome> {
    let steps = steps_for(sys, spec);
    let gains = riccati_gains(sys, spec.lambda, spec.t_final, 2 * steps)?;
    forward(sys, spec.lambda, spec.t_final, steps, Some(&gains))
}

/// Optimal control of the full-order system.
pub fn lqr_full(sys: &HeatControlSystem, spec: &LqrSpec) -> Result<LqrOutcome> {
    validate(spec)?;
    run(&ForcedLti::full(sys), spec)
}

/// The full system with u ≡ 0, on the same time grid as [`lqr_full`].
pub fn simulate_uncontrolled(sys: &HeatControlSystem, spec: &LqrSpec) -> Result<LqrOutcome> {
    validate(spec)?;
    let full = ForcedLti::full(sys);
    forward(&full, spec.lambda, spec.t_final, steps_for(&full, spec), None)
}

fn relative_errors(sys: &HeatControlSystem, approx: &LqrOutcome, reference: &LqrOutcome) -> (f64, f64) {
    let (x, r) = (approx.terminal_state(), reference.terminal_state());
    let ratio = |num: f64, den: f64| if den == 0.0 { if num == 0.0 { 0.0 } else { f64::INFINITY } } else { num / den };
    let e_s = ratio((&x - &r).norm(), r.norm());
    let e_o = ratio((sys.psi.transpose() * (&x - &r)).norm(), (sys.psi.transpose() * &r).norm());
    (e_s, e_o)
}

/// Solves the control problem, in reduced coordinates when `basis` is given,
/// and reports terminal errors against the full-order optimum.
pub fn lqr_solve(sys: &HeatControlSystem, spec: &LqrSpec, basis: Option<&OrthoBasis>) -> Result<LqrReport> {
    let reference = lqr_full(sys, spec)?;
    lqr_solve_with_reference(sys, spec, basis, &reference)
}

/// As [`lqr_solve`] with a precomputed full-order reference.
pub fn lqr_solve_with_reference(
    sys: &HeatControlSystem,
    spec: &LqrSpec,
    basis: Option<&OrthoBasis>,
    reference: &LqrOutcome,
) -> Result<LqrReport> {
    validate(spec)?;
    let outcome = match basis {
        None => reference.clone(),
        Some(v) => run(&ForcedLti::reduced(sys, v)?, spec)?,
    };
    let (e_s, e_o) = relative_errors(sys, &outcome, reference);
    Ok(LqrReport { outcome, e_s, e_o })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldSample, GridSpec};
    use crate::numerics::qr_thin;
    use crate::problems::heat_control_system;
    use std::f64::consts::PI;

    fn system(n: usize, with_psi: bool) -> HeatControlSystem {
        let g = GridSpec::unit(1, n);
        let k = FieldSample::from_fn(g.clone(), |x| 0.06 + 0.04 * (3.0 * x[0]).sin());
        let x = |i: usize| g.coord(0, i);
        let b = DVector::from_fn(n, |i, _| 1.0 + (4.0 * x(i)).cos());
        let phi0 = DVector::from_fn(n, |i, _| (PI * x(i)).sin());
        let raw = |shift: f64| DMatrix::from_fn(n, 3, |i, j| ((j + 1) as f64 * PI * x(i) + shift).sin());
        let w = qr_thin(&raw(0.0)).unwrap().0;
        let psi = if with_psi { qr_thin(&raw(0.3)).unwrap().0 } else { DMatrix::zeros(n, 3) };
        heat_control_system(&k, &b, &w, &psi, &phi0).unwrap()
    }

    fn spec() -> LqrSpec {
        LqrSpec { lambda: 1e-3, t_final: 2.0, steps: 100 }
    }

    #[test]
    fn no_observation_means_no_control() {
        let s = system(16, false);
        let out = lqr_full(&s, &spec()).unwrap();
        assert!(out.controls.iter().all(|v| *v == 0.0));
        let free = simulate_uncontrolled(&s, &spec()).unwrap();
        assert_eq!(out.states, free.states);
        let rep = lqr_solve(&s, &spec(), Some(&OrthoBasis::coordinate(16, 4))).unwrap();
        assert_eq!(rep.e_o, 0.0);
    }

    #[test]
    fn control_lowers_cost_and_observation() {
        let s = system(24, true);
        let opt = lqr_full(&s, &spec()).unwrap();
        let free = simulate_uncontrolled(&s, &spec()).unwrap();
        assert!(opt.cost <= free.cost);
        let y = |o: &LqrOutcome| (s.psi.transpose() * o.terminal_state()).norm();
        assert!(y(&opt) * 2.0 <= y(&free), "{} vs {}", y(&opt), y(&free));
    }

    #[test]
    fn expensive_control_is_negligible() {
        let s = system(16, true);
        let sp = LqrSpec { lambda: 1e6, ..spec() };
        let opt = lqr_full(&s, &sp).unwrap();
        let free = simulate_uncontrolled(&s, &sp).unwrap();
        assert!(opt.controls.abs().max() < 1e-5);
        assert!((opt.terminal_state() - free.terminal_state()).norm() < 1e-6 * free.terminal_state().norm());
    }

    #[test]
    fn full_basis_reduction_is_exact() {
        let s = system(12, true);
        let rep = lqr_solve(&s, &spec(), Some(&OrthoBasis::coordinate(12, 12))).unwrap();
        assert!(rep.e_s < 1e-9 && rep.e_o < 1e-9, "{} {}", rep.e_s, rep.e_o);
    }
}
