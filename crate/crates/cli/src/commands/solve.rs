use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use subreg_core::exec::{map_indexed, stream_rng};
use subreg_core::grassmann::OrthoBasis;
use subreg_core::numerics::sym_eig_smallest;
use subreg_core::problems::{burgers_integrate, BurgersSpec, Preset, SubspaceDataset};
use subreg_core::solvers::{
    deflated_cg, jacobi_leading_eigenspace, pod_basis, pod_rom_integrate, relative_trajectory_error, two_grid_rho,
    RomBasis, RomSource, DEFAULT_POWER_ITERS,
};

use super::{collect, default_knn, load_dataset, sample_range, Predictors, Source};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Deflated conjugate gradients on a random right-hand side.
    Cg,
    /// Spectral radius of the two-grid error propagator.
    Twogrid,
    /// POD/Galerkin reduced Burgers model.
    Rom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub schema_version: u32,
    pub dataset: PathBuf,
    pub solver: SolverKind,
    pub sources: Vec<Source>,
    /// Subspace sizes for the exact source.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Leading samples processed (all when absent).
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Jacobi damping; the dataset's value when absent.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_power")]
    pub power_iters: usize,
    /// Seed of the CG right-hand sides.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub train_dataset: Option<PathBuf>,
    #[serde(default = "default_knn")]
    pub k_nn: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    10_000
}

fn default_power() -> usize {
    DEFAULT_POWER_ITERS
}

/// Subspaces to try on one sample: (source, basis).
fn subspaces(
    c: &SolveConfig,
    ds: &SubspaceDataset,
    preds: &Predictors,
    i: usize,
    exact: impl Fn(usize) -> CliResult<OrthoBasis>,
) -> CliResult<Vec<(Source, OrthoBasis)>> {
    let n = ds.ambient_dim();
    let mut out = Vec::new();
    for &s in &c.sources {
        match s {
            Source::None => out.push((s, OrthoBasis::empty(n))),
            Source::Exact => {
                let max = c.sizes.iter().copied().max().unwrap_or(0);
                let full = exact(max)?;
                for &m in &c.sizes {
                    out.push((s, OrthoBasis::new(full.matrix().columns(0, m).into_owned())?));
                }
            }
            _ => out.push((s, preds.basis(s, &ds.features[i])?.expect("predicted source"))),
        }
    }
    Ok(out)
}

fn header(kind: SolverKind) -> &'static [&'static str] {
    match kind {
        SolverKind::Cg => &["sample", "source", "m", "iterations", "residual", "converged"],
        SolverKind::Twogrid => &["sample", "source", "m", "rho"],
        SolverKind::Rom => &["sample", "source", "m", "relative_error"],
    }
}

fn solve_sample(c: &SolveConfig, ds: &SubspaceDataset, preds: &Predictors, omega: f64, i: usize) -> CliResult<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    let row = |s: Source, m: usize, rest: Vec<String>| {
        let mut r = vec![i.to_string(), s.name().to_string(), m.to_string()];
        r.extend(rest);
        r
    };
    match c.solver {
        SolverKind::Cg | SolverKind::Twogrid => {
            let a = ds.operator(i)?;
            let exact = |m: usize| -> CliResult<OrthoBasis> {
                if c.solver == SolverKind::Cg {
                    Ok(OrthoBasis::orthonormalize(&sym_eig_smallest(&a, m)?.vectors)?)
                } else {
                    Ok(jacobi_leading_eigenspace(&a, omega, m)?)
                }
            };
            let spaces = subspaces(c, ds, preds, i, exact)?;
            let mut rng = stream_rng(c.seed, i as u64);
            let b = DVector::from_fn(a.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            for (s, v) in spaces {
                if c.solver == SolverKind::Cg {
                    let (iters, res, conv) = match deflated_cg(&a, &b, &v, c.tol, c.max_iter) {
                        Ok((_, rep)) => (rep.iterations, *rep.residuals.last().unwrap_or(&0.0), true),
                        Err(subreg_core::Error::MaxIterations { iterations, residual }) => (iterations, residual, false),
                        Err(e) => return Err(e.into()),
                    };
                    rows.push(row(s, v.dim(), vec![iters.to_string(), num(res), conv.to_string()]));
                } else {
                    let rho = two_grid_rho(&a, &v, omega, c.power_iters)?;
                    rows.push(row(s, v.dim(), vec![num(rho)]));
                }
            }
        }
        SolverKind::Rom => {
            let (nu, u0) = ds.burgers_fields(i)?;
            let spec = BurgersSpec::default();
            let full = burgers_integrate(&nu, &u0, &spec)?;
            let exact = |m: usize| -> CliResult<OrthoBasis> { Ok(pod_basis(&full, m)?.basis) };
            for (s, v) in subspaces(c, ds, preds, i, exact)? {
                let m = v.dim();
                let source = if s == Source::Exact { RomSource::LocalPod } else { RomSource::Predicted };
                let rom = pod_rom_integrate(&nu, &u0, &RomBasis { basis: v, source }, &spec)?;
                rows.push(row(s, m, vec![num(relative_trajectory_error(&rom, &full))]));
            }
        }
    }
    Ok(rows)
}

pub fn run(cfg: &Loaded<SolveConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    if c.sources.is_empty() {
        return Err(CliError::config("`sources` is empty"));
    }
    if c.sources.contains(&Source::Exact) && c.sizes.is_empty() {
        return Err(CliError::config("source `exact` needs `sizes`"));
    }
    let ds = load_dataset(&c.dataset)?;
    let preset = ds.spec.preset;
    let fits = match c.solver {
        SolverKind::Cg | SolverKind::Twogrid => !matches!(preset, Preset::Burgers | Preset::Control),
        SolverKind::Rom => preset == Preset::Burgers,
    };
    if !fits {
        return Err(CliError::config(format!("solver {:?} does not apply to preset {preset}", c.solver)));
    }
    if let Some(&m) = c.sizes.iter().max() {
        if m > ds.ambient_dim() {
            return Err(CliError::config(format!("subspace size {m} exceeds dimension {}", ds.ambient_dim())));
        }
    }
    let idx = sample_range(c.samples, ds.n_samples())?;
    let preds = Predictors::load(&c.sources, c.checkpoint.as_deref(), c.train_dataset.as_deref(), c.k_nn)?;
    let omega = c.omega.unwrap_or(ds.spec.omega);
    let mut dir = OutDir::open(out)?;
    log::info!("solver {:?} on {} samples", c.solver, idx.len());
    let results = collect(map_indexed(idx.len(), |j| solve_sample(c, &ds, &preds, omega, idx[j])))?;
    let name = match c.solver {
        SolverKind::Cg => "cg.csv",
        SolverKind::Twogrid => "twogrid.csv",
        SolverKind::Rom => "rom.csv",
    };
    let mut w = dir.csv(name, &cfg.hash, header(c.solver))?;
    for r in results.into_iter().flatten() {
        w.row(r)?;
    }
    w.close()?;
    dir.finish("solve", &cfg.value, &cfg.hash)?;
    Ok(())
}
