use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{interpolate_normal_coords, KernelParams, RegressorModel};
use crate::exec::map_indexed;
use crate::grassmann::{loss_z2, relative_subspace_error, OrthoBasis};
use crate::problems::SubspaceDataset;
use crate::{Error, Result};

/// Anything mapping a sample's raw features to a basis matrix.
pub trait Predictor: Sync {
    fn predict(&self, features: &[f64]) -> Result<DMatrix<f64>>;
}

impl Predictor for RegressorModel {
    fn predict(&self, features: &[f64]) -> Result<DMatrix<f64>> {
        self.forward(features)
    }
}

/// Single-vector models stacked column by column.
impl Predictor for [RegressorModel] {
    fn predict(&self, features: &[f64]) -> Result<DMatrix<f64>> {
        let cols = self.iter().map(|m| m.forward(features)).collect::<Result<Vec<_>>>()?;
        let n = cols.first().map_or(0, |c| c.nrows());
        let width = cols.iter().map(|c| c.ncols()).sum();
        let mut out = DMatrix::zeros(n, width);
        let mut j = 0;
        for c in cols {
            out.columns_mut(j, c.ncols()).copy_from(&c);
            j += c.ncols();
        }
        Ok(out)
    }
}

/// Nearest-neighbour interpolation in normal coordinates.
pub struct NormalCoordInterpolator<'a> {
    pub train: &'a SubspaceDataset,
    pub k_nn: usize,
    pub kernel: KernelParams,
}

impl Predictor for NormalCoordInterpolator<'_> {
    fn predict(&self, features: &[f64]) -> Result<DMatrix<f64>> {
        interpolate_normal_coords(self.train, features, self.k_nn, &self.kernel).map(OrthoBasis::into_matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMetric {
    /// Relative error of the target measured against the predicted span.
    RelSubspace,
    /// Mean over target columns of the sign-invariant distance to the
    /// matching normalized predicted column.
    Z2PerVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub metric: EvalMetric,
    pub mean: f64,
    pub worst: f64,
    pub per_sample: Vec<f64>,
}

fn sample_error(pred: &DMatrix<f64>, target: &OrthoBasis, metric: EvalMetric) -> Result<f64> {
    if pred.nrows() != target.ambient_dim() {
        return Err(Error::DimensionMismatch(format!("prediction has {} rows, target {}", pred.nrows(), target.ambient_dim())));
    }
    match metric {
        EvalMetric::RelSubspace => relative_subspace_error(&OrthoBasis::orthonormalize(pred)?, target),
        EvalMetric::Z2PerVector => {
            let p = pred.ncols().min(target.dim());
            if p == 0 {
                return Err(Error::DimensionMismatch("no columns to compare".into()));
            }
            let total: f64 = (0..p)
                .map(|j| {
                    let u = pred.column(j);
                    let u = u / u.norm().max(f64::MIN_POSITIVE);
                    loss_z2(target.matrix().column(j).as_slice(), u.as_slice())
                })
                .sum();
            Ok(total / p as f64)
        }
    }
}

/// Per-sample errors in dataset order with their mean and maximum.
pub fn evaluate<P: Predictor + ?Sized>(pred: &P, ds: &SubspaceDataset, metric: EvalMetric) -> Result<EvalSummary> {
    let per_sample = map_indexed(ds.n_samples(), |i| sample_error(&pred.predict(&ds.features[i])?, &ds.targets[i], metric))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mean = if per_sample.is_empty() { 0.0 } else { per_sample.iter().sum::<f64>() / per_sample.len() as f64 };
    let worst = per_sample.iter().copied().fold(0.0, f64::max);
    Ok(EvalSummary { metric, mean, worst, per_sample })
}
