//! Dataset presets and the in-memory subspace dataset.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::exec::{stream_rng, try_map_indexed};
use crate::fields::{
    contrast_map, grf_sample, morse_potential_1d, morse_potential_2d, ContrastSpec, FieldSample, GridSpec, GrfSpec,
    Morse2dParams, MorseRanges,
};
use crate::grassmann::OrthoBasis;
use crate::numerics::{sym_eig_smallest, SparseOperator};
use crate::problems::{
    assemble_elliptic, assemble_schrodinger, burgers_integrate, heat_control_system, twogrid_field,
    viscosity_from_field, BurgersSpec, FourierPhase, HeatControlSystem, TwoGridFieldSpec,
};
use crate::solvers::{balanced_truncation, jacobi_leading_eigenspace, pod_basis, DEFAULT_OMEGA};
use crate::{Error, Result};

/// Potentials are clipped to this value before assembly. Walls of the Morse
/// family can reach 1e30 and beyond, which would swamp the small eigenvalues
/// in a dense eigensolver; eigenvectors are unaffected at working precision.
pub const QM_POTENTIAL_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Elliptic2dIso,
    Elliptic2dAniso,
    Elliptic3d,
    Qm1d,
    Qm2d,
    Burgers,
    Twogrid,
    Control,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Elliptic2dIso,
        Preset::Elliptic2dAniso,
        Preset::Elliptic3d,
        Preset::Qm1d,
        Preset::Qm2d,
        Preset::Burgers,
        Preset::Twogrid,
        Preset::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Elliptic2dIso => "elliptic2d-iso",
            Preset::Elliptic2dAniso => "elliptic2d-aniso",
            Preset::Elliptic3d => "elliptic3d",
            Preset::Qm1d => "qm1d",
            Preset::Qm2d => "qm2d",
            Preset::Burgers => "burgers",
            Preset::Twogrid => "twogrid",
            Preset::Control => "control",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }

    /// Presets whose targets are eigenvectors of an assembled operator.
    pub fn is_eigen(self) -> bool {
        matches!(self, Preset::Elliptic2dIso | Preset::Elliptic2dAniso | Preset::Elliptic3d | Preset::Qm1d | Preset::Qm2d)
    }

    /// Reduced default nodes per axis.
    pub fn default_grid_n(self) -> usize {
        match self {
            Preset::Elliptic2dIso | Preset::Elliptic2dAniso | Preset::Qm2d | Preset::Twogrid | Preset::Control => 32,
            Preset::Elliptic3d => 12,
            Preset::Qm1d => 100,
            Preset::Burgers => 128,
        }
    }

    pub fn grid(self, n: usize) -> Result<GridSpec> {
        match self {
            Preset::Elliptic2dIso | Preset::Elliptic2dAniso | Preset::Twogrid => Ok(GridSpec::unit(2, n)),
            Preset::Elliptic3d => Ok(GridSpec::unit(3, n)),
            Preset::Qm1d => GridSpec::new(vec![n], vec![0.0], vec![10.0]),
            Preset::Qm2d => GridSpec::new(vec![n, n], vec![-7.0, -7.0], vec![7.0, 7.0]),
            Preset::Burgers | Preset::Control => Ok(GridSpec::unit(1, n)),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub preset: Preset,
    pub n_samples: usize,
    /// Target subspace dimension.
    pub m_target: usize,
    pub seed: u64,
    /// Nodes per axis; the preset default when absent.
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// Number of input and observation shapes (control preset).
    #[serde(default = "default_controls")]
    pub n_controls: usize,
    /// Jacobi damping (twogrid preset).
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Phase convention of the two-grid coefficient field.
    #[serde(default = "default_phase")]
    pub phase: FourierPhase,
}

fn default_controls() -> usize {
    4
}

fn default_omega() -> f64 {
    DEFAULT_OMEGA
}

fn default_phase() -> FourierPhase {
    FourierPhase::Periodic
}

impl DatasetSpec {
    pub fn new(preset: Preset, n_samples: usize, m_target: usize, seed: u64) -> Self {
        Self {
            preset,
            n_samples,
            m_target,
            seed,
            grid_n: None,
            n_controls: default_controls(),
            omega: default_omega(),
            phase: default_phase(),
        }
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_n = Some(n);
        self
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.preset.grid(self.grid_n.unwrap_or_else(|| self.preset.default_grid_n()))
    }

    /// Feature channels stored per sample.
    pub fn channels(&self) -> usize {
        match self.preset {
            Preset::Elliptic2dAniso | Preset::Burgers => 2,
            Preset::Control => 3 + 2 * self.n_controls,
            _ => 1,
        }
    }
}

/// Samples with feature channels and orthonormal target bases on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDataset {
    pub spec: DatasetSpec,
    pub grid: GridSpec,
    /// Per sample, `channels` fields of `grid.len()` values, channel-major.
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<OrthoBasis>,
}

impl SubspaceDataset {
    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn channels(&self) -> usize {
        self.spec.channels()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.first().map_or(self.spec.m_target, |t| t.dim())
    }

    pub fn ambient_dim(&self) -> usize {
        self.targets.first().map_or(self.grid.len(), |t| t.ambient_dim())
    }

    /// Channel `c` of sample `i` as a field.
    pub fn channel(&self, i: usize, c: usize) -> FieldSample {
        let n = self.grid.len();
        FieldSample { grid: self.grid.clone(), values: self.features[i][c * n..(c + 1) * n].to_vec() }
    }

    /// Checks shapes and orthonormality of every sample.
    pub fn validate(&self) -> Result<()> {
        let len = self.channels() * self.grid.len();
        if self.features.len() != self.targets.len() {
            return Err(Error::DimensionMismatch("feature and target counts differ".into()));
        }
        let (n, k) = (self.ambient_dim(), self.target_dim());
        for (f, t) in self.features.iter().zip(&self.targets) {
            if f.len() != len {
                return Err(Error::DimensionMismatch(format!("feature length {} != {len}", f.len())));
            }
            if t.ambient_dim() != n || t.dim() != k {
                return Err(Error::DimensionMismatch("targets differ in shape".into()));
            }
            OrthoBasis::new(t.matrix().clone())?;
        }
        Ok(())
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            spec: DatasetSpec { n_samples: indices.len(), ..self.spec.clone() },
            grid: self.grid.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
        }
    }

    /// First `n_train` samples and the rest.
    pub fn split(&self, n_train: usize) -> (Self, Self) {
        let n_train = n_train.min(self.n_samples());
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.n_samples()).collect();
        (self.subset(&train), self.subset(&test))
    }

    /// Operator whose eigenvectors or Jacobi modes form the targets.
    pub fn operator(&self, i: usize) -> Result<SparseOperator> {
        match self.spec.preset {
            Preset::Elliptic2dIso | Preset::Elliptic3d | Preset::Twogrid => assemble_elliptic(&[self.channel(i, 0)]),
            Preset::Elliptic2dAniso => assemble_elliptic(&[self.channel(i, 0), self.channel(i, 1)]),
            Preset::Qm1d | Preset::Qm2d => assemble_schrodinger(&self.channel(i, 0)),
            p => Err(Error::InvalidArgument(format!("preset {p} has no stationary operator"))),
        }
    }

    /// Viscosity and initial condition of a Burgers sample.
    pub fn burgers_fields(&self, i: usize) -> Result<(FieldSample, FieldSample)> {
        if self.spec.preset != Preset::Burgers {
            return Err(Error::InvalidArgument("not a Burgers dataset".into()));
        }
        Ok((self.channel(i, 0), self.channel(i, 1)))
    }

    /// Heat control system of a control sample.
    pub fn control_system(&self, i: usize) -> Result<HeatControlSystem> {
        if self.spec.preset != Preset::Control {
            return Err(Error::InvalidArgument("not a control dataset".into()));
        }
        let m = self.spec.n_controls;
        let vec = |c| DVector::from_vec(self.channel(i, c).values);
        let mat = |off: usize| {
            let cols: Vec<DVector<f64>> = (0..m).map(|j| vec(off + j)).collect();
            if cols.is_empty() {
                DMatrix::zeros(self.grid.len(), 0)
            } else {
                DMatrix::from_columns(&cols)
            }
        };
        heat_control_system(&self.channel(i, 0), &vec(1), &mat(3), &mat(3 + m), &vec(2))
    }
}

const ELLIPTIC_2D_GRF: GrfSpec = GrfSpec { gamma: 1.0 / (20.0 * std::f64::consts::PI), r: 0.5, normalize: false };
const ELLIPTIC_3D_GRF: GrfSpec = GrfSpec { gamma: 0.01, r: 1.5, normalize: false };
const BURGERS_NU_GRF: GrfSpec = GrfSpec { gamma: 40.0, r: 4.0, normalize: true };
const BURGERS_U0_GRF: GrfSpec = GrfSpec { gamma: 10.0, r: 2.0, normalize: true };
const CONTROL_SHAPE_GRF: GrfSpec = GrfSpec { gamma: 5.0, r: 4.0, normalize: true };
const CONTROL_K_GRF: GrfSpec = GrfSpec { gamma: 6.0, r: 4.0, normalize: true };

fn eigen_target(op: &SparseOperator, m: usize) -> Result<OrthoBasis> {
    OrthoBasis::new(sym_eig_smallest(op, m)?.vectors)
}

fn gaussian_columns<R: Rng + ?Sized>(grid: &GridSpec, m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Ok(DMatrix::zeros(grid.len(), 0));
    }
    let cols: Vec<DVector<f64>> =
        (0..m).map(|_| DVector::from_vec(grf_sample(grid, &CONTROL_SHAPE_GRF, rng).values)).collect();
    Ok(OrthoBasis::orthonormalize(&DMatrix::from_columns(&cols))?.into_matrix())
}

/// Features and target of sample `i`.
fn generate_sample(spec: &DatasetSpec, grid: &GridSpec, i: usize) -> Result<(Vec<f64>, OrthoBasis)> {
    let mut rng = stream_rng(spec.seed, i as u64);
    let m = spec.m_target;
    match spec.preset {
        Preset::Elliptic2dIso | Preset::Elliptic3d => {
            let (g, c) = if spec.preset == Preset::Elliptic3d {
                (ELLIPTIC_3D_GRF, ContrastSpec::ELLIPTIC_3D)
            } else {
                (ELLIPTIC_2D_GRF, ContrastSpec::ELLIPTIC_2D)
            };
            let k = contrast_map(&grf_sample(grid, &g, &mut rng), &c)?;
            let target = eigen_target(&assemble_elliptic(std::slice::from_ref(&k))?, m)?;
            Ok((k.values, target))
        }
        Preset::Elliptic2dAniso => {
            let k1 = contrast_map(&grf_sample(grid, &ELLIPTIC_2D_GRF, &mut rng), &ContrastSpec::ELLIPTIC_2D)?;
            let k2 = contrast_map(&grf_sample(grid, &ELLIPTIC_2D_GRF, &mut rng), &ContrastSpec::ELLIPTIC_2D)?;
            let target = eigen_target(&assemble_elliptic(&[k1.clone(), k2.clone()])?, m)?;
            Ok(([k1.values, k2.values].concat(), target))
        }
        Preset::Qm1d | Preset::Qm2d => {
            let u = if spec.preset == Preset::Qm1d {
                morse_potential_1d(&MorseRanges::one_dim().sample(&mut rng), grid)
            } else {
                morse_potential_2d(&Morse2dParams::sample(&MorseRanges::two_dim(), &mut rng), grid)
            }
            .map(|v| v.min(QM_POTENTIAL_CAP));
            let target = eigen_target(&assemble_schrodinger(&u)?, m)?;
            Ok((u.values, target))
        }
        Preset::Burgers => {
            let psi = grf_sample(grid, &BURGERS_NU_GRF, &mut rng);
            let nu = viscosity_from_field(&psi, 5e-3, 30.0, 0.05);
            let u0 = grf_sample(grid, &BURGERS_U0_GRF, &mut rng);
            let snaps = burgers_integrate(&nu, &u0, &BurgersSpec::default())?;
            let target = pod_basis(&snaps, m)?.basis;
            Ok(([nu.values, u0.values].concat(), target))
        }
        Preset::Twogrid => {
            let fs = TwoGridFieldSpec { phase: spec.phase, ..TwoGridFieldSpec::default() };
            let k = twogrid_field(grid, &fs, &mut rng)?;
            let target = jacobi_leading_eigenspace(&assemble_elliptic(std::slice::from_ref(&k))?, spec.omega, m)?;
            Ok((k.values, target))
        }
        Preset::Control => {
            let chi = grf_sample(grid, &CONTROL_K_GRF, &mut rng);
            let k = viscosity_from_field(&chi, 5e-3, 5.0, 0.1);
            let b = grf_sample(grid, &CONTROL_SHAPE_GRF, &mut rng);
            let phi0 = grf_sample(grid, &CONTROL_SHAPE_GRF, &mut rng);
            let w = gaussian_columns(grid, spec.n_controls, &mut rng)?;
            let psi = gaussian_columns(grid, spec.n_controls, &mut rng)?;
            let bv = DVector::from_column_slice(&b.values);
            let sys = heat_control_system(&k, &bv, &w, &psi, &DVector::from_column_slice(&phi0.values))?;
            let target = control_target(&sys, m)?;
            let mut feats = [k.values, b.values, phi0.values].concat();
            feats.extend(w.iter());
            feats.extend(psi.iter());
            Ok((feats, target))
        }
    }
}

/// Orthonormalised leading balanced-truncation directions of (A, [W, b̂], Ψᵀ).
/// The normalised forcing is treated as an extra input since it drives the
/// state like a constant control.
pub fn control_target(sys: &HeatControlSystem, m: usize) -> Result<OrthoBasis> {
    let n = sys.state_dim();
    let mut inputs = sys.w.clone().insert_column(sys.w.ncols(), 0.0);
    let bn = sys.b.norm();
    if bn > 0.0 {
        inputs.set_column(sys.w.ncols(), &(&sys.b / bn));
    }
    let red = balanced_truncation(&sys.a, &inputs, &sys.psi.transpose(), m)?;
    if m == 0 {
        return Ok(OrthoBasis::empty(n));
    }
    OrthoBasis::orthonormalize(&red.projection)
}

/// Generates a dataset; samples are independent and drawn in parallel.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<SubspaceDataset> {
    let grid = spec.grid()?;
    if spec.m_target > grid.len() {
        return Err(Error::InvalidArgument(format!("m_target {} exceeds grid size {}", spec.m_target, grid.len())));
    }
    if spec.preset == Preset::Control && spec.n_controls > grid.len() {
        return Err(Error::InvalidArgument("more control shapes than grid nodes".into()));
    }
    let samples = try_map_indexed(spec.n_samples, |i| generate_sample(spec, &grid, i))?;
    let (features, targets) = samples.into_iter().unzip();
    Ok(SubspaceDataset { spec: spec.clone(), grid, features, targets })
}

/// Eigenvector dataset for one of the eigen presets at its default grid.
pub fn gen_eig_dataset(preset: Preset, n_samples: usize, m_target: usize, seed: u64) -> Result<SubspaceDataset> {
    if !preset.is_eigen() {
        return Err(Error::InvalidArgument(format!("{preset} is not an eigenproblem preset")));
    }
    gen_dataset(&DatasetSpec::new(preset, n_samples, m_target, seed))
}

/// A manufactured solution u and its right-hand side f = A u.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsPair {
    pub sample: usize,
    pub f: DVector<f64>,
    pub u: DVector<f64>,
}

/// Number of eigenvectors combined into each manufactured solution.
pub const RHS_MODES: usize = 10;

/// u = Σ_{i ≤ 10} φ_i z_i with z ~ N(0, 1), and f = A u.
pub fn rhs_from_modes(op: &SparseOperator, phi: &DMatrix<f64>, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let u = phi * z;
    (op.matvec(&u), u)
}

/// `n_rhs` manufactured pairs per sample of an elliptic eigen dataset.
pub fn gen_elliptic_rhs_pairs(ds: &SubspaceDataset, n_rhs: usize, seed: u64) -> Result<Vec<RhsPair>> {
    if !matches!(ds.spec.preset, Preset::Elliptic2dIso | Preset::Elliptic2dAniso | Preset::Elliptic3d) {
        return Err(Error::InvalidArgument("right-hand sides need an elliptic dataset".into()));
    }
    if ds.target_dim() < RHS_MODES {
        return Err(Error::InvalidArgument(format!("need {RHS_MODES} eigenvectors per sample, have {}", ds.target_dim())));
    }
    let per_sample = try_map_indexed(ds.n_samples(), |i| {
        let op = ds.operator(i)?;
        let phi = ds.targets[i].matrix().columns(0, RHS_MODES).into_owned();
        let mut rng = stream_rng(seed, i as u64);
        Ok::<_, Error>(
            (0..n_rhs)
                .map(|_| {
                    let z = DVector::from_fn(RHS_MODES, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let (f, u) = rhs_from_modes(&op, &phi, &z);
                    RhsPair { sample: i, f, u }
                })
                .collect::<Vec<_>>(),
        )
    })?;
    Ok(per_sample.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::relative_subspace_error;
    use crate::numerics::{orthonormality_error, sym_eig_dense};

    #[test]
    fn preset_names_roundtrip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()).unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!(Preset::from_name("elliptic4d").is_err());
    }

    #[test]
    fn rayleigh_quotient_is_first_eigenvalue() {
        for preset in [Preset::Elliptic2dIso, Preset::Elliptic2dAniso, Preset::Qm1d] {
            let ds = gen_dataset(&DatasetSpec::new(preset, 3, 1, 4).with_grid(if preset == Preset::Qm1d { 100 } else { 12 }))
                .unwrap();
            for i in 0..3 {
                let op = ds.operator(i).unwrap();
                let phi = ds.targets[i].matrix().column(0).into_owned();
                let rq = phi.dot(&op.matvec(&phi));
                let lam = sym_eig_dense(&op.to_dense()).values[0];
                assert!((rq - lam).abs() <= 1e-8 * lam.abs(), "{preset}: {rq} vs {lam}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, 4, 3, 9).with_grid(10)).unwrap();
        let b = gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, 4, 3, 9).with_grid(10)).unwrap();
        assert_eq!(a, b);
        let c = gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, 4, 3, 10).with_grid(10)).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn small_elliptic_smoke() {
        let ds = gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, 20, 4, 1).with_grid(16)).unwrap();
        ds.validate().unwrap();
        assert!(ds.targets.iter().all(|t| orthonormality_error(t.matrix()) < 1e-10));
        for i in 0..ds.n_samples() {
            let op = ds.operator(i).unwrap();
            let v = ds.targets[i].matrix();
            let av = op.mul_dense(v);
            let lmax = op.gershgorin_bound();
            for j in 0..v.ncols() {
                let lam = v.column(j).dot(&av.column(j));
                assert!((av.column(j) - v.column(j) * lam).norm() <= 1e-8 * lmax);
            }
        }
    }

    #[test]
    fn every_preset_generates() {
        for p in Preset::ALL {
            let n = match p {
                Preset::Elliptic3d => 5,
                Preset::Qm1d | Preset::Burgers => 64,
                _ => 10,
            };
            let mut spec = DatasetSpec::new(p, 2, 3, 2).with_grid(n);
            spec.n_controls = 2;
            let ds = gen_dataset(&spec).unwrap();
            ds.validate().unwrap();
            assert_eq!(ds.features[0].len(), ds.channels() * ds.grid.len());
        }
    }

    #[test]
    fn rhs_pairs() {
        let ds = gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, 2, 10, 3).with_grid(10)).unwrap();
        let pairs = gen_elliptic_rhs_pairs(&ds, 3, 5).unwrap();
        assert_eq!(pairs.len(), 6);
        for p in &pairs {
            let op = ds.operator(p.sample).unwrap();
            let au = op.matvec(&p.u);
            assert!((au - &p.f).norm() <= 1e-12 * p.f.norm());
            let ub = OrthoBasis::orthonormalize(&DMatrix::from_column_slice(p.u.len(), 1, p.u.as_slice())).unwrap();
            assert!(relative_subspace_error(&ds.targets[p.sample], &ub).unwrap() < 1e-10);
        }
        // z = e₁ gives the first eigenpair.
        let op = ds.operator(0).unwrap();
        let phi = ds.targets[0].matrix().columns(0, RHS_MODES).into_owned();
        let mut z = DVector::zeros(RHS_MODES);
        z[0] = 1.0;
        let (f, u) = rhs_from_modes(&op, &phi, &z);
        let lam = u.dot(&op.matvec(&u));
        assert!((&u - phi.column(0)).norm() == 0.0);
        assert!((f - phi.column(0) * lam).norm() < 1e-8 * lam);
    }
}
