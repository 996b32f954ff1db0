//! Random input fields on Dirichlet grids.
//!
//! Grids hold interior nodes only: along an axis with `n` nodes on `[lo, hi]`
//! the spacing is `h = (hi − lo)/(n + 1)` and node `j` sits at `lo + (j + 1)h`.
//! Multi-dimensional fields are stored with axis 0 varying fastest.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extents: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridSpec {
    pub fn new(extents: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let g = Self { extents, lo, hi };
        g.validate()?;
        Ok(g)
    }

    /// `n` nodes per axis on the unit cube of dimension `dim`.
    pub fn unit(dim: usize, n: usize) -> Self {
        Self { extents: vec![n; dim], lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.extents.len();
        if !(1..=3).contains(&d) || self.lo.len() != d || self.hi.len() != d {
            return Err(Error::InvalidArgument(format!("grid must have 1-3 axes with matching bounds, got {d}")));
        }
        if self.extents.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("grid extents must be at least 2".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidArgument("grid bounds must be finite with lo < hi".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.extents[axis] + 1) as f64
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lo[axis] + (j + 1) as f64 * self.spacing(axis)
    }

    /// Multi-index of flat node `k`.
    pub fn unflatten(&self, mut k: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (a, &n) in self.extents.iter().enumerate() {
            idx[a] = k % n;
            k /= n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for a in (0..self.dim()).rev() {
            k = k * self.extents[a] + idx[a];
        }
        k
    }

    /// Physical coordinates of flat node `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let idx = self.unflatten(k);
        (0..self.dim()).map(|a| self.coord(a, idx[a])).collect()
    }
}

/// Values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} values on a grid of {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Gaussian random field parameters: sine-mode weights (1 + γλ)^(−r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrfSpec {
    pub gamma: f64,
    pub r: f64,
    /// Rescale each draw to unit root-mean-square over the grid nodes.
    #[serde(default)]
    pub normalize: bool,
}

/// Orthonormal Dirichlet sine mode m (1-based) of an axis, at node j.
fn sine_mode(grid: &GridSpec, axis: usize, m: usize, j: usize) -> f64 {
    let l = grid.length(axis);
    (2.0 / l).sqrt() * (PI * m as f64 * (j + 1) as f64 / (grid.extents[axis] + 1) as f64).sin()
}

/// Laplacian eigenvalue Σ (π m_d / L_d)² of the mode with 1-based multi-index `m`.
pub fn mode_eigenvalue(grid: &GridSpec, m: &[usize]) -> f64 {
    m.iter().enumerate().map(|(a, &md)| (PI * md as f64 / grid.length(a)).powi(2)).sum()
}

/// Weight (1 + γλ)^(−r) of every mode, laid out like grid nodes (mode m_d − 1 on axis d).
pub fn grf_mode_weights(grid: &GridSpec, gamma: f64, r: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let idx = grid.unflatten(k);
            let m: Vec<usize> = (0..grid.dim()).map(|a| idx[a] + 1).collect();
            (1.0 + gamma * mode_eigenvalue(grid, &m)).powf(-r)
        })
        .collect()
}

/// Applies the separable sine synthesis (coefficients → nodal values) or its
/// transpose along every axis. The discrete modes are orthonormal under the
/// h-weighted inner product, so analysis is synthesis scaled by Π h_d.
fn sine_transform(grid: &GridSpec, data: &[f64]) -> Vec<f64> {
    let mut cur = data.to_vec();
    let mut stride = 1;
    for a in 0..grid.dim() {
        let n = grid.extents[a];
        let basis: Vec<f64> = (0..n * n).map(|t| sine_mode(grid, a, t % n + 1, t / n)).collect();
        let mut next = vec![0.0; cur.len()];
        let outer = cur.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for j in 0..n {
                    let row = &basis[j * n..(j + 1) * n];
                    next[base + j * stride] = (0..n).map(|m| row[m] * cur[base + m * stride]).sum();
                }
            }
        }
        cur = next;
        stride *= n;
    }
    cur
}

/// Mode coefficients of a nodal field (inverse of the synthesis).
pub fn sine_coefficients(field: &FieldSample) -> Vec<f64> {
    let g = &field.grid;
    let vol: f64 = (0..g.dim()).map(|a| g.spacing(a)).product();
    sine_transform(g, &field.values).into_iter().map(|v| v * vol).collect()
}

/// Field Σ_m ξ_m (1 + γλ_m)^(−r) φ_m with ξ_m ~ N(0, 1) over all grid modes.
pub fn grf_sample<R: Rng + ?Sized>(grid: &GridSpec, spec: &GrfSpec, rng: &mut R) -> FieldSample {
    let weights = grf_mode_weights(grid, spec.gamma, spec.r);
    let coeffs: Vec<f64> = weights.iter().map(|w| w * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut values = sine_transform(grid, &coeffs);
    if spec.normalize {
        let rms = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
        if rms > 0.0 {
            values.iter_mut().for_each(|v| *v /= rms);
        }
    }
    FieldSample { grid: grid.clone(), values }
}

/// a = α + (β − α)(tanh(sψ) + 1)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastSpec {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

impl ContrastSpec {
    /// Two-dimensional elliptic coefficient map.
    pub const ELLIPTIC_2D: Self = Self { alpha: 1.0, beta: 50.0, s: 1.0 };
    /// Three-dimensional map, written with α < β and the sign moved into s.
    pub const ELLIPTIC_3D: Self = Self { alpha: 1.0, beta: 50.0, s: -2.0 };
}

pub fn contrast_map(psi: &FieldSample, spec: &ContrastSpec) -> Result<FieldSample> {
    let ContrastSpec { alpha, beta, s } = *spec;
    if !(beta > alpha && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("contrast map needs beta > alpha > 0, got {alpha}, {beta}")));
    }
    Ok(psi.map(|p| alpha + (beta - alpha) * ((s * p).tanh() + 1.0) / 2.0))
}

/// Blended polynomial q(x) = (1 − y) q̃(y) + c y with y = (x − 1)/(x + 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseBranch {
    /// Coefficients of q̃ in increasing degree.
    pub coeffs: Vec<f64>,
    pub c: f64,
}

impl MorseBranch {
    fn eval(&self, x: f64) -> f64 {
        let y = (x - 1.0) / (x + 1.0);
        let qt = self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * y + a);
        (1.0 - y) * qt + self.c * y
    }
}

/// Expanded Morse oscillator V(r) = d(1 − exp(−y p(r)))², y = (r/r_e − 1)/(r/r_e + 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseParams {
    pub r_e: f64,
    pub d: f64,
    /// Branch used for r < r_e.
    pub q1: MorseBranch,
    /// Branch used for r ≥ r_e.
    pub q2: MorseBranch,
}

impl MorseParams {
    pub fn eval(&self, r: f64) -> f64 {
        let x = r / self.r_e;
        let y = (x - 1.0) / (x + 1.0);
        let p = if x < 1.0 { self.q1.eval(x) } else { self.q2.eval(x) };
        self.d * (1.0 - (-y * p).exp()).powi(2)
    }

    /// Limit of V as r → ∞: d(1 − e^(−c₂))².
    pub fn dissociation_limit(&self) -> f64 {
        self.d * (1.0 - (-self.q2.c).exp()).powi(2)
    }
}

/// Sampling ranges for random Morse potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseRanges {
    pub degree: usize,
    pub r_e: (f64, f64),
    pub d: (f64, f64),
    pub q1_coeffs: (f64, f64),
    pub q1_c: (f64, f64),
    pub q2_coeffs: (f64, f64),
    pub q2_c: (f64, f64),
}

impl MorseRanges {
    pub fn one_dim() -> Self {
        Self {
            degree: 10,
            r_e: (1.0, 8.0),
            d: (10.0, 40.0),
            q1_coeffs: (0.0, 5.0),
            q1_c: (0.0, 5.0),
            q2_coeffs: (0.0, 10.0),
            q2_c: (1.0, 11.0),
        }
    }

    pub fn two_dim() -> Self {
        Self {
            degree: 2,
            r_e: (1.0, 5.0),
            d: (10.0, 40.0),
            q1_coeffs: (0.0, 3.0),
            q1_c: (10.0, 13.0),
            q2_coeffs: (0.0, 3.0),
            q2_c: (10.0, 13.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MorseParams {
        let mut u = |(a, b): (f64, f64)| a + (b - a) * rng.random::<f64>();
        let r_e = u(self.r_e);
        let d = u(self.d);
        let q1 = MorseBranch { coeffs: (0..=self.degree).map(|_| u(self.q1_coeffs)).collect(), c: u(self.q1_c) };
        let q2 = MorseBranch { coeffs: (0..=self.degree).map(|_| u(self.q2_coeffs)).collect(), c: u(self.q2_c) };
        MorseParams { r_e, d, q1, q2 }
    }
}

pub fn morse_potential_1d(params: &MorseParams, grid: &GridSpec) -> FieldSample {
    FieldSample::from_fn(grid.clone(), |x| params.eval(x[0]))
}

/// Two radial wells: V1 centred at +c(u, v) and V2 at −c(u, v), c = √2 r_e of V1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Morse2dParams {
    pub v1: MorseParams,
    pub v2: MorseParams,
    pub direction: (f64, f64),
}

impl Morse2dParams {
    pub fn sample<R: Rng + ?Sized>(ranges: &MorseRanges, rng: &mut R) -> Self {
        let v1 = ranges.sample(rng);
        let v2 = ranges.sample(rng);
        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = a.hypot(b).max(f64::MIN_POSITIVE);
        Self { v1, v2, direction: (a / n, b / n) }
    }

    pub fn centers(&self) -> ((f64, f64), (f64, f64)) {
        let c = 2f64.sqrt() * self.v1.r_e;
        let (u, v) = self.direction;
        ((c * u, c * v), (-c * u, -c * v))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let ((x1, y1), (x2, y2)) = self.centers();
        self.v1.eval((x - x1).hypot(y - y1)) + self.v2.eval((x - x2).hypot(y - y2))
    }
}

pub fn morse_potential_2d(params: &Morse2dParams, grid: &GridSpec) -> FieldSample {
    FieldSample::from_fn(grid.clone(), |p| params.eval(p[0], p[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn grid_geometry() {
        let g = GridSpec::new(vec![3, 4], vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.spacing(0), 0.25);
        let pt = g.point(g.flatten(&[2, 3]));
        assert!((pt[0] - 0.75).abs() < 1e-15 && (pt[1] - 0.6).abs() < 1e-15);
        assert!(GridSpec::new(vec![1], vec![0.0], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![3], vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn sine_analysis_inverts_synthesis() {
        let g = GridSpec::new(vec![5, 4, 3], vec![0.0; 3], vec![1.0, 2.0, 0.5]).unwrap();
        let c: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = FieldSample { grid: g.clone(), values: sine_transform(&g, &c) };
        let back = sine_coefficients(&f);
        assert!(c.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn grf_deterministic_and_centered() {
        let g = GridSpec::unit(2, 6);
        let spec = GrfSpec { gamma: 0.05, r: 1.0, normalize: false };
        let a = grf_sample(&g, &spec, &mut stream_rng(9, 0));
        let b = grf_sample(&g, &spec, &mut stream_rng(9, 0));
        assert_eq!(a, b);

        let n = 10_000;
        let mut sum = vec![0.0; g.len()];
        let mut sq = vec![0.0; g.len()];
        for s in 0..n {
            let f = grf_sample(&g, &spec, &mut stream_rng(10, s as u64));
            for (k, v) in f.values.iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
        }
        for k in 0..g.len() {
            let mean = sum[k] / n as f64;
            let se = ((sq[k] / n as f64 - mean * mean) / n as f64).sqrt();
            assert!(mean.abs() <= 4.0 * se, "node {k}: {mean} vs se {se}");
        }
    }

    #[test]
    fn grf_mode_variances() {
        let g = GridSpec::unit(1, 16);
        let n = 10_000;
        let var_ratio = |gamma: f64, r: f64| {
            let spec = GrfSpec { gamma, r, normalize: false };
            let w = grf_mode_weights(&g, gamma, r);
            let mut acc = vec![0.0; 16];
            for s in 0..n {
                let c = sine_coefficients(&grf_sample(&g, &spec, &mut stream_rng(11, s as u64)));
                for m in 0..16 {
                    acc[m] += c[m] * c[m];
                }
            }
            for m in 0..3 {
                let v = acc[m] / n as f64;
                // Sample variance of N(0, w²) has relative SE √(2/n) ≈ 1.4%.
                assert!((v / (w[m] * w[m]) - 1.0).abs() < 0.06, "mode {m}");
            }
            (acc[0] / acc[1], acc.iter().cloned().fold(f64::INFINITY, f64::min) / acc[0])
        };
        let (_, flat) = var_ratio(0.0, 1.0);
        assert!(flat > 0.9);
        let ratios: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&r| var_ratio(0.1, r).0).collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    }

    #[test]
    fn normalized_grf_has_unit_rms() {
        let g = GridSpec::unit(1, 32);
        let f = grf_sample(&g, &GrfSpec { gamma: 40.0, r: 4.0, normalize: true }, &mut stream_rng(1, 0));
        let rms = (f.values.iter().map(|v| v * v).sum::<f64>() / 32.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contrast_cases() {
        let g = GridSpec::unit(1, 4);
        let zero = contrast_map(&FieldSample::constant(g.clone(), 0.0), &ContrastSpec::ELLIPTIC_2D).unwrap();
        assert!(zero.values.iter().all(|&v| v == 25.5));
        let hi = contrast_map(&FieldSample::constant(g.clone(), 1e3), &ContrastSpec::ELLIPTIC_2D).unwrap();
        let lo = contrast_map(&FieldSample::constant(g.clone(), -1e3), &ContrastSpec::ELLIPTIC_2D).unwrap();
        assert_eq!((hi.values[0], lo.values[0]), (50.0, 1.0));
        let psi = grf_sample(&GridSpec::unit(2, 12), &GrfSpec { gamma: 1.0 / (20.0 * PI), r: 0.5, normalize: false }, &mut stream_rng(2, 0));
        let a = contrast_map(&psi, &ContrastSpec::ELLIPTIC_2D).unwrap();
        assert!(a.min() > 1.0 && a.max() < 50.0);
        assert!(contrast_map(&psi, &ContrastSpec { alpha: 50.0, beta: 1.0, s: 2.0 }).is_err());
    }

    #[test]
    fn morse_equilibrium_and_limit() {
        let mut rng = stream_rng(3, 0);
        let p = MorseRanges::one_dim().sample(&mut rng);
        assert_eq!(p.eval(p.r_e), 0.0);
        assert!((p.eval(1e9) - p.dissociation_limit()).abs() < 1e-6 * p.d);
        let f = morse_potential_1d(&p, &GridSpec::new(vec![100], vec![0.0], vec![10.0]).unwrap());
        assert!(f.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn morse_boundedness_scan() {
        let g = GridSpec::new(vec![100], vec![0.0], vec![10.0]).unwrap();
        for s in 0..200 {
            let p = MorseRanges::one_dim().sample(&mut stream_rng(4, s));
            let f = morse_potential_1d(&p, &g);
            assert!(f.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn morse_2d_geometry() {
        let mut rng = stream_rng(5, 0);
        let mut p = Morse2dParams::sample(&MorseRanges::two_dim(), &mut rng);
        p.v2 = p.v1.clone();
        for (x, y) in [(0.3, -1.2), (2.0, 4.5), (-6.0, 0.1)] {
            assert!((p.eval(x, y) - p.eval(-x, -y)).abs() < 1e-12 * p.eval(x, y).abs().max(1.0));
        }
        let ((x1, y1), (x2, y2)) = p.centers();
        let dist = (x1 - x2).hypot(y1 - y2);
        let expect = p.v1.eval(0.0) + p.v2.eval(dist);
        assert!((p.eval(x1, y1) - expect).abs() < 1e-12 * expect.max(1.0));
        p.direction = (1.0, 0.0);
        let ((cx, cy), _) = p.centers();
        assert!((cx - 2f64.sqrt() * p.v1.r_e).abs() < 1e-15 && cy == 0.0);
        let g = GridSpec::new(vec![20, 20], vec![-7.0, -7.0], vec![7.0, 7.0]).unwrap();
        assert_eq!(morse_potential_2d(&p, &g).values.len(), 400);
    }
}
