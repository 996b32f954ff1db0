//! Bounded-contrast coefficient fields from truncated Fourier sums.
//!
//! s₀(x, y) = Re Σ_{k ∈ {0..M−1}²} c_k e^{i(k₁x + k₂y)} / (1 + λ₁|k|²), c_k ~ N(0, 1),
//! k = α + (β − α)(tanh(λ₂ s₀) + 1)/2.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::fields::{FieldSample, GridSpec};
use crate::{Error, Result};

/// Phase convention for the Fourier sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierPhase {
    /// x is the node index scaled to one period, 2πj/n (discrete Fourier synthesis).
    Periodic,
    /// x is the physical node coordinate.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoGridFieldSpec {
    pub modes: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phase: FourierPhase,
}

impl Default for TwoGridFieldSpec {
    fn default() -> Self {
        Self { modes: 100, lambda1: 0.1, lambda2: 1.0, alpha: 1.0, beta: 50.0, phase: FourierPhase::Periodic }
    }
}

/// Samples a coefficient field on a 2-D grid.
pub fn twogrid_field<R: Rng + ?Sized>(grid: &GridSpec, spec: &TwoGridFieldSpec, rng: &mut R) -> Result<FieldSample> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("two-grid fields are 2-D, got {}-D", grid.dim())));
    }
    if !(spec.beta > spec.alpha && spec.alpha > 0.0) || spec.modes == 0 {
        return Err(Error::InvalidArgument("need beta > alpha > 0 and at least one mode".into()));
    }
    let m = spec.modes;
    // Coefficients c_k, k₁ fastest, each divided by 1 + λ₁|k|².
    let c: Vec<f64> = (0..m * m)
        .map(|t| {
            let (k1, k2) = ((t % m) as f64, (t / m) as f64);
            rng.sample::<f64, _>(StandardNormal) / (1.0 + spec.lambda1 * (k1 * k1 + k2 * k2))
        })
        .collect();
    let phase = |axis: usize, j: usize| match spec.phase {
        FourierPhase::Periodic => 2.0 * std::f64::consts::PI * j as f64 / grid.extents[axis] as f64,
        FourierPhase::Physical => grid.coord(axis, j),
    };
    let (nx, ny) = (grid.extents[0], grid.extents[1]);
    // cos(k₁x + k₂y) = cos k₁x cos k₂y − sin k₁x sin k₂y; contract over k₂ first.
    let mut cy = vec![0.0; m * ny];
    let mut sy = vec![0.0; m * ny];
    for j in 0..ny {
        let y = phase(1, j);
        for k2 in 0..m {
            let (s, co) = (k2 as f64 * y).sin_cos();
            for k1 in 0..m {
                let ck = c[k2 * m + k1];
                cy[j * m + k1] += ck * co;
                sy[j * m + k1] += ck * s;
            }
        }
    }
    let mut values = vec![0.0; nx * ny];
    for i in 0..nx {
        let x = phase(0, i);
        let trig: Vec<(f64, f64)> = (0..m).map(|k1| (k1 as f64 * x).sin_cos()).collect();
        for j in 0..ny {
            let s0: f64 = (0..m).map(|k1| trig[k1].1 * cy[j * m + k1] - trig[k1].0 * sy[j * m + k1]).sum();
            let s = (spec.lambda2 * s0).tanh();
            values[j * nx + i] = spec.alpha + (spec.beta - spec.alpha) * (s + 1.0) / 2.0;
        }
    }
    FieldSample::new(grid.clone(), values)
}
