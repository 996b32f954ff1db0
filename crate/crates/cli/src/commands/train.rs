use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subreg_core::learn::{
    evaluate, train, train_z2_ensemble, write_checkpoint, Checkpoint, EncoderMode, EpochRecord, EvalMetric, TrainConfig,
    TrainLoss, DEFAULT_HIDDEN,
};

use super::load_dataset;
use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub schema_version: u32,
    pub dataset: PathBuf,
    /// Leading samples used for training; the rest form the test set.
    pub n_train: usize,
    pub loss: TrainLoss,
    /// Predicted dimension; ignored when `r_sweep` is given.
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub r_sweep: Option<Vec<usize>>,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub decay_every: usize,
    pub weight_decay: f64,
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub encoder: EncoderMode,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}

fn default_true() -> bool {
    true
}

impl TrainRunConfig {
    pub fn train_config(&self, r: usize) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            r,
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            decay: self.decay,
            decay_every: self.decay_every,
            weight_decay: self.weight_decay,
            seed: self.seed,
            hidden: self.hidden.clone(),
            encoder: self.encoder,
            normalize: self.normalize,
            ..TrainConfig::new(self.loss, r, self.seed)
        }
    }

    fn dims(&self) -> CliResult<Vec<usize>> {
        if self.loss == TrainLoss::Z2 {
            return Ok(vec![1]);
        }
        match (&self.r_sweep, self.r) {
            (Some(s), _) if !s.is_empty() => Ok(s.clone()),
            (None, Some(r)) => Ok(vec![r]),
            _ => Err(CliError::config("set `r` or a non-empty `r_sweep`")),
        }
    }
}

const HISTORY_HEADER: [&str; 6] = ["r", "member", "epoch", "train_loss", "test_loss", "test_metric"];

pub fn run(cfg: &Loaded<TrainRunConfig>, out: &Path) -> CliResult<()> {
    let c = &cfg.config;
    let ds = load_dataset(&c.dataset)?;
    if c.n_train == 0 || c.n_train > ds.n_samples() {
        return Err(CliError::config(format!("n_train = {} with {} samples", c.n_train, ds.n_samples())));
    }
    let dims = c.dims()?;
    for &r in &dims {
        c.train_config(r).validate(ds.target_dim())?;
    }
    let (train_ds, test_ds) = ds.split(c.n_train);
    let mut dir = OutDir::open(out)?;
    let sweep = c.r_sweep.is_some() && c.loss != TrainLoss::Z2;
    let mut summary = Vec::new();
    for &r in &dims {
        let tc = c.train_config(r);
        log::info!("training loss={:?} r={r} on {} samples", c.loss, train_ds.n_samples());
        let (members, histories): (Vec<_>, Vec<Vec<EpochRecord>>) = if c.loss == TrainLoss::Z2 {
            train_z2_ensemble(&train_ds, &test_ds, &tc)?
        } else {
            let (m, h) = train(&train_ds, &test_ds, &tc)?;
            (vec![m], vec![h])
        };
        let prefix = if sweep { format!("r{r}/") } else { String::new() };
        let mut hist = dir.csv(&format!("{prefix}history.csv"), &cfg.hash, &HISTORY_HEADER)?;
        for (member, h) in histories.iter().enumerate() {
            for e in h {
                hist.row([
                    r.to_string(),
                    member.to_string(),
                    e.epoch.to_string(),
                    num(e.train_loss),
                    num(e.test_loss),
                    num(e.test_metric),
                ])?;
            }
        }
        hist.close()?;
        let ck = Checkpoint { config: tc, members };
        let files = write_checkpoint(&ck, &dir.path(&format!("{prefix}checkpoint")))?;
        dir.record(files);
        let metric = if c.loss == TrainLoss::Z2 { EvalMetric::Z2PerVector } else { EvalMetric::RelSubspace };
        let test_error = if test_ds.n_samples() > 0 { evaluate(&ck, &test_ds, metric)?.mean } else { f64::NAN };
        let last = |h: &Vec<EpochRecord>, f: fn(&EpochRecord) -> f64| {
            h.last().map(f).unwrap_or(f64::NAN)
        };
        summary.push((r, last(&histories[0], |e| e.train_loss), last(&histories[0], |e| e.test_loss), test_error));
    }
    if sweep {
        let mut s = dir.csv("sweep.csv", &cfg.hash, &["r", "train_loss", "test_loss", "test_error"])?;
        for (r, tl, vl, te) in summary {
            s.row([r.to_string(), num(tl), num(vl), num(te)])?;
        }
        s.close()?;
    }
    dir.finish("train", &cfg.value, &cfg.hash)?;
    Ok(())
}
