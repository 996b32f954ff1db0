use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use subreg_core::exec::map_indexed;
use subreg_core::grassmann::OrthoBasis;
use subreg_core::problems::{control_target, Preset};
use subreg_core::solvers::{lqr_full, lqr_solve_with_reference, LqrSpec};

use super::{collect, default_knn, load_dataset, sample_range, Predictors, Source};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub schema_version: u32,
    pub dataset: PathBuf,
    pub sources: Vec<Source>,
    /// Reduced dimensions for the exact source.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Replaces the observation shapes with zeros.
    #[serde(default)]
    pub zero_observation: bool,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub train_dataset: Option<PathBuf>,
    #[serde(default = "default_knn")]
    pub k_nn: usize,
}

fn default_lambda() -> f64 {
    LqrSpec::default().lambda
}

fn default_t_final() -> f64 {
    LqrSpec::default().t_final
}

fn default_steps() -> usize {
    LqrSpec::default().steps
}

const HEADER: [&str; 7] = ["sample", "source", "m", "cost", "e_s", "e_o", "max_abs_control"];

pub fn run(cfg: &Loaded<ControlConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    if c.sources.is_empty() {
        return Err(CliError::config("`sources` is empty"));
    }
    if c.sources.contains(&Source::Exact) && c.sizes.is_empty() {
        return Err(CliError::config("source `exact` needs `sizes`"));
    }
    let ds = load_dataset(&c.dataset)?;
    if ds.spec.preset != Preset::Control {
        return Err(CliError::config(format!("control needs a control dataset, got {}", ds.spec.preset)));
    }
    let spec = LqrSpec { lambda: c.lambda, t_final: c.t_final, steps: c.steps };
    let idx = sample_range(c.samples, ds.n_samples())?;
    let preds = Predictors::load(&c.sources, c.checkpoint.as_deref(), c.train_dataset.as_deref(), c.k_nn)?;
    let mut dir = OutDir::open(out)?;
    log::info!("LQR on {} samples", idx.len());
    let results = collect(map_indexed(idx.len(), |j| -> CliResult<Vec<Vec<String>>> {
        let i = idx[j];
        let mut sys = ds.control_system(i)?;
        if c.zero_observation {
            sys.psi = DMatrix::zeros(sys.psi.nrows(), sys.psi.ncols());
        }
        let reference = lqr_full(&sys, &spec)?;
        let mut rows = Vec::new();
        let mut emit = |s: Source, v: Option<&OrthoBasis>| -> CliResult<()> {
            let rep = lqr_solve_with_reference(&sys, &spec, v, &reference)?;
            let umax = rep.outcome.controls.abs().max();
            rows.push(vec![
                i.to_string(),
                s.name().to_string(),
                v.map_or(sys.state_dim(), |b| b.dim()).to_string(),
                num(rep.outcome.cost),
                num(rep.e_s),
                num(rep.e_o),
                num(umax),
            ]);
            Ok(())
        };
        for &s in &c.sources {
            match s {
                Source::None => emit(s, None)?,
                Source::Exact => {
                    for &m in &c.sizes {
                        emit(s, Some(&control_target(&sys, m)?))?;
                    }
                }
                _ => emit(s, Some(&preds.basis(s, &ds.features[i])?.expect("predicted source")))?,
            }
        }
        Ok(rows)
    }))?;
    let mut w = dir.csv("control.csv", &cfg.hash, &HEADER)?;
    for r in results.into_iter().flatten() {
        w.row(r)?;
    }
    w.close()?;
    dir.finish("control", &cfg.value, &cfg.hash)?;
    Ok(())
}
