pub mod control;
pub mod count;
pub mod eval;
pub mod gen;
pub mod report;
pub mod solve;
pub mod train;

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use subreg_core::grassmann::OrthoBasis;
use subreg_core::learn::{interpolate_normal_coords, read_checkpoint, Checkpoint, KernelParams, Predictor};
use subreg_core::problems::{read_dataset, SubspaceDataset};

use crate::error::{CliError, CliResult};

pub fn load_dataset(path: &Path) -> CliResult<SubspaceDataset> {
    read_dataset(path).map_err(|e| CliError::config(format!("cannot load dataset {}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    read_checkpoint(path).map_err(|e| CliError::config(format!("cannot load checkpoint {}: {e}", path.display())))
}

/// Origin of the subspace handed to a downstream solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// No subspace (plain solver or full-order model).
    None,
    /// Computed from the sample's own operator or trajectory.
    Exact,
    /// Normal-coordinate interpolation from a training dataset.
    Interpolated,
    /// Prediction of a trained checkpoint.
    Learned,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::None => "none",
            Source::Exact => "exact",
            Source::Interpolated => "interpolated",
            Source::Learned => "learned",
        }
    }
}

pub fn default_knn() -> usize {
    5
}

/// Loaded predictors for the learned and interpolated sources.
pub struct Predictors {
    pub checkpoint: Option<Checkpoint>,
    pub train: Option<SubspaceDataset>,
    pub k_nn: usize,
}

impl Predictors {
    pub fn load(sources: &[Source], checkpoint: Option<&Path>, train: Option<&Path>, k_nn: usize) -> CliResult<Self> {
        let checkpoint = if sources.contains(&Source::Learned) {
            let p = checkpoint.ok_or_else(|| CliError::config("source `learned` needs `checkpoint`"))?;
            Some(load_checkpoint(p)?)
        } else {
            None
        };
        let train = if sources.contains(&Source::Interpolated) {
            let p = train.ok_or_else(|| CliError::config("source `interpolated` needs `train_dataset`"))?;
            Some(load_dataset(p)?)
        } else {
            None
        };
        Ok(Self { checkpoint, train, k_nn })
    }

    /// Predicted basis for raw features, or `None` for sources handled by the caller.
    pub fn basis(&self, source: Source, features: &[f64]) -> CliResult<Option<OrthoBasis>> {
        match source {
            Source::Learned => {
                let ck = self.checkpoint.as_ref().expect("checkpoint loaded");
                let raw: DMatrix<f64> = ck.predict(features)?;
                Ok(Some(OrthoBasis::orthonormalize(&raw)?))
            }
            Source::Interpolated => {
                let train = self.train.as_ref().expect("training set loaded");
                Ok(Some(interpolate_normal_coords(train, features, self.k_nn, &KernelParams::default())?))
            }
            _ => Ok(None),
        }
    }
}

/// Indices `0..limit` (all samples when absent), checked against `n`.
pub fn sample_range(limit: Option<usize>, n: usize) -> CliResult<Vec<usize>> {
    let m = limit.unwrap_or(n);
    if m > n {
        return Err(CliError::config(format!("requested {m} samples, dataset has {n}")));
    }
    Ok((0..m).collect())
}

/// Collects per-sample results in order, returning the first failure.
pub fn collect<T>(items: Vec<CliResult<T>>) -> CliResult<Vec<T>> {
    items.into_iter().collect()
}
