use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use subreg_core::learn::{evaluate, EvalMetric, EvalSummary, KernelParams, NormalCoordInterpolator, Predictor};
use subreg_core::problems::SubspaceDataset;

use super::{default_knn, load_checkpoint, load_dataset};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    /// A trained checkpoint.
    Model,
    /// The true targets themselves.
    Oracle,
    /// Normal-coordinate interpolation from the leading `n_train` samples.
    Interpolate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub schema_version: u32,
    pub dataset: PathBuf,
    /// Leading samples skipped (the training split); the rest are evaluated.
    #[serde(default)]
    pub n_train: usize,
    pub predictor: PredictorKind,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default = "default_knn")]
    pub k_nn: usize,
    #[serde(default)]
    pub kernel: KernelParams,
    #[serde(default = "default_metric")]
    pub metric: EvalMetric,
}

fn default_metric() -> EvalMetric {
    EvalMetric::RelSubspace
}

struct Oracle<'a>(&'a SubspaceDataset);

impl Predictor for Oracle<'_> {
    fn predict(&self, features: &[f64]) -> subreg_core::Result<DMatrix<f64>> {
        let i = self
            .0
            .features
            .iter()
            .position(|f| f.as_slice() == features)
            .ok_or_else(|| subreg_core::Error::InvalidArgument("sample not in dataset".into()))?;
        Ok(self.0.targets[i].matrix().clone())
    }
}

pub fn run(cfg: &Loaded<EvalConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    let ds = load_dataset(&c.dataset)?;
    if c.n_train > ds.n_samples() {
        return Err(CliError::config(format!("n_train = {} with {} samples", c.n_train, ds.n_samples())));
    }
    let (train_ds, test_ds) = ds.split(c.n_train);
    let summary: EvalSummary = match c.predictor {
        PredictorKind::Model => {
            let p = c.checkpoint.as_ref().ok_or_else(|| CliError::config("predictor `model` needs `checkpoint`"))?;
            let ck = load_checkpoint(p)?;
            evaluate(&ck, &test_ds, c.metric)?
        }
        PredictorKind::Oracle => evaluate(&Oracle(&test_ds), &test_ds, c.metric)?,
        PredictorKind::Interpolate => {
            if c.k_nn == 0 || c.k_nn > train_ds.n_samples() {
                return Err(CliError::config(format!("k_nn = {} with {} training samples", c.k_nn, train_ds.n_samples())));
            }
            let p = NormalCoordInterpolator { train: &train_ds, k_nn: c.k_nn, kernel: c.kernel };
            evaluate(&p, &test_ds, c.metric)?
        }
    };
    let mut dir = OutDir::open(out)?;
    let mut w = dir.csv("eval.csv", &cfg.hash, &["row", "sample", "value"])?;
    for (i, v) in summary.per_sample.iter().enumerate() {
        w.row(["sample".to_string(), (c.n_train + i).to_string(), num(*v)])?;
    }
    w.row(["mean".to_string(), String::new(), num(summary.mean)])?;
    w.row(["worst".to_string(), String::new(), num(summary.worst)])?;
    w.close()?;
    println!(
        "{}",
        serde_json::json!({ "metric": summary.metric, "n": summary.per_sample.len(), "mean": summary.mean, "worst": summary.worst })
    );
    dir.finish("eval", &cfg.value, &cfg.hash)?;
    Ok(())
}
