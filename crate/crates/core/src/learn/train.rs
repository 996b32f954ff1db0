use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EncoderMode, FeatureEncoder, RegressorModel, DEFAULT_HIDDEN};
use crate::exec::{map_indexed, stream_rng};
use crate::grassmann::{grad_loss, loss_l1, loss_l2_stoch, relative_subspace_error, LossKind, LsqPath, OrthoBasis};
use crate::numerics::{svd_sorted, sym_eig_sorted};
use crate::problems::SubspaceDataset;
use crate::{Error, Result};

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainLoss {
    L1,
    L2,
    L2Stab,
    /// Sign-invariant distance to a single target eigenvector.
    Z2,
}

/// Samples per gradient work unit; fixed so the reduction order never
/// depends on the thread count.
const GRAD_CHUNK: usize = 4;

/// Stream offsets separating the random draws of a run.
const STREAM_INIT: u64 = 1 << 40;
const STREAM_SHUFFLE: u64 = 2 << 40;
const STREAM_PROBE: u64 = 3 << 40;
const STREAM_TEST_PROBE: u64 = 4 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: TrainLoss,
    /// Predicted subspace dimension (1 for Z2).
    pub r: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning rate factor applied every `decay_every` epochs.
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
    /// Target column learned under Z2.
    #[serde(default)]
    pub column: usize,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
}

fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}

fn default_true() -> bool {
    true
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.99
}

impl TrainConfig {
    pub fn new(loss: TrainLoss, r: usize, seed: u64) -> Self {
        Self {
            loss,
            r,
            batch_size: 16,
            epochs: 100,
            learning_rate: 1e-4,
            decay: 0.5,
            decay_every: 50,
            weight_decay: 1e-4,
            seed,
            hidden: default_hidden(),
            encoder: EncoderMode::default(),
            normalize: true,
            column: 0,
            beta1: default_beta1(),
            beta2: default_beta2(),
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.loss == TrainLoss::Z2 {
            if self.r != 1 {
                return bad("Z2 training predicts one vector (r = 1)");
            }
            if self.column >= k {
                return bad("Z2 target column exceeds the target dimension");
            }
        } else if self.r < k {
            return Err(Error::InvalidArgument(format!("predicted dimension r = {} below target dimension {k}", self.r)));
        }
        if self.batch_size == 0 || self.decay_every == 0 {
            return bad("batch size and decay interval must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.weight_decay >= 0.0 && self.decay > 0.0 && self.decay <= 1.0) {
            return bad("learning rate and weight decay must be non-negative, decay in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("momentum factors must lie in [0, 1)");
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (0-based).
    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.powi((epoch / self.decay_every) as i32)
    }
}

/// One training pair with its encoded features.
#[derive(Debug, Clone)]
pub struct Example {
    pub x: Vec<f64>,
    /// Target basis (a single column under Z2).
    pub target: DMatrix<f64>,
    /// Probe vector for the stochastic losses.
    pub z: Option<DVector<f64>>,
}

/// Loss of one output and its sensitivity.
fn sample_loss(out: &DMatrix<f64>, ex: &Example, loss: TrainLoss) -> Result<(f64, DMatrix<f64>)> {
    match loss {
        TrainLoss::L1 => Ok((loss_l1(out, &ex.target)?, grad_loss(out, &ex.target, None, LossKind::L1)?)),
        TrainLoss::L2 | TrainLoss::L2Stab => {
            let (kind, path) =
                if loss == TrainLoss::L2 { (LossKind::L2, LsqPath::Normal) } else { (LossKind::L2Stab, LsqPath::Stabilized) };
            let z = ex.z.as_ref().ok_or_else(|| Error::InvalidArgument("stochastic loss needs a probe".into()))?;
            Ok((loss_l2_stoch(out, &ex.target, z, path)?, grad_loss(out, &ex.target, Some(z), kind)?))
        }
        TrainLoss::Z2 => {
            let minus = (out - &ex.target).norm_squared();
            let plus = (out + &ex.target).norm_squared();
            let s = if minus <= plus { 1.0 } else { -1.0 };
            Ok((minus.min(plus), (out - &ex.target * s) * 2.0))
        }
    }
}

/// Mean loss over `batch` and its gradient with respect to the parameters.
pub fn grad_model(model: &RegressorModel, batch: &[Example], loss: TrainLoss) -> Result<(f64, Vec<f64>)> {
    let np = model.param_count();
    if batch.is_empty() {
        return Ok((0.0, vec![0.0; np]));
    }
    let chunks = batch.len().div_ceil(GRAD_CHUNK);
    let parts = map_indexed(chunks, |c| -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; np];
        let mut l = 0.0;
        for ex in &batch[c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(batch.len())] {
            let trace = model.trace(&ex.x);
            let out = model.output(&trace);
            let (li, d) = sample_loss(&out, ex, loss)?;
            l += li;
            model.backward(&trace, &d, &mut g);
        }
        Ok((l, g))
    });
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; np];
    for part in parts {
        let (l, g) = part?;
        total += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|a| *a *= scale);
    Ok((total * scale, grad))
}

/// Mean loss over `batch` without gradients.
pub fn batch_loss(model: &RegressorModel, batch: &[Example], loss: TrainLoss) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let parts = map_indexed(batch.len(), |i| sample_loss(&model.forward_encoded(&batch[i].x), &batch[i], loss).map(|r| r.0));
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total / batch.len() as f64)
}

/// Sign-of-momentum optimizer with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Lion {
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    momentum: Vec<f64>,
}

impl Lion {
    pub fn new(n: usize, beta1: f64, beta2: f64, weight_decay: f64) -> Self {
        Self { beta1, beta2, weight_decay, momentum: vec![0.0; n] }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        for ((p, g), m) in params.iter_mut().zip(grad).zip(self.momentum.iter_mut()) {
            let c = self.beta1 * *m + (1.0 - self.beta1) * g;
            let sign = if c > 0.0 {
                1.0
            } else if c < 0.0 {
                -1.0
            } else {
                0.0
            };
            *p -= lr * (sign + self.weight_decay * *p);
            *m = self.beta2 * *m + (1.0 - self.beta2) * g;
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_metric: f64,
}

/// Leading r-dimensional subspace of the pooled target columns, completed
/// with seeded random directions when the pool is too small.
pub fn global_target_basis(targets: &[DMatrix<f64>], r: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = targets.first().map(|t| t.nrows()).ok_or_else(|| Error::InvalidArgument("no targets".into()))?;
    let cols: usize = targets.iter().map(|t| t.ncols()).sum();
    let lead = if cols <= n {
        let mut pool = DMatrix::zeros(n, cols);
        let mut j = 0;
        for t in targets {
            pool.columns_mut(j, t.ncols()).copy_from(t);
            j += t.ncols();
        }
        let s = svd_sorted(&pool);
        let keep = s.singular_values.iter().take(r).filter(|&&v| v > 1e-10 * s.singular_values[0]).count();
        s.u.columns(0, keep).into_owned()
    } else {
        let mut g = DMatrix::zeros(n, n);
        for t in targets {
            g += t * t.transpose();
        }
        let (_, vecs) = sym_eig_sorted(&g);
        DMatrix::from_fn(n, r.min(n), |i, j| vecs[(i, n - 1 - j)])
    };
    if lead.ncols() == r {
        return Ok(lead);
    }
    let mut rng = stream_rng(seed, STREAM_INIT + 1);
    let mut m = DMatrix::zeros(n, r);
    m.columns_mut(0, lead.ncols()).copy_from(&lead);
    for j in lead.ncols()..r {
        for i in 0..n {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(OrthoBasis::orthonormalize(&m)?.into_matrix())
}

fn probe(loss: TrainLoss, k: usize, seed: u64, stream: u64) -> Option<DVector<f64>> {
    match loss {
        TrainLoss::L2 | TrainLoss::L2Stab => {
            let mut rng = stream_rng(seed, stream);
            Some(DVector::from_fn(k, |_, _| rng.sample(StandardNormal)))
        }
        _ => None,
    }
}

fn target_of(t: &OrthoBasis, config: &TrainConfig) -> DMatrix<f64> {
    if config.loss == TrainLoss::Z2 {
        t.matrix().columns(config.column, 1).into_owned()
    } else {
        t.matrix().clone()
    }
}

/// Encodes every sample of `ds` with fixed probes drawn from `stream`.
pub fn examples(model: &RegressorModel, ds: &SubspaceDataset, config: &TrainConfig, stream: u64) -> Result<Vec<Example>> {
    let k = ds.target_dim();
    (0..ds.n_samples())
        .map(|i| {
            Ok(Example {
                x: model.encoder.encode(&ds.features[i])?,
                target: target_of(&ds.targets[i], config),
                z: probe(config.loss, k, config.seed, stream + i as u64),
            })
        })
        .collect()
}

/// Mean per-sample error of the model on prepared examples: relative
/// subspace error, or the sign-invariant vector distance under Z2.
pub fn example_metric(model: &RegressorModel, exs: &[Example], loss: TrainLoss) -> Result<f64> {
    if exs.is_empty() {
        return Ok(0.0);
    }
    let vals = map_indexed(exs.len(), |i| -> Result<f64> {
        let out = model.forward_encoded(&exs[i].x);
        if loss == TrainLoss::Z2 {
            let u = &out / out.norm().max(f64::MIN_POSITIVE);
            Ok(crate::grassmann::loss_z2(exs[i].target.as_slice(), u.as_slice()))
        } else {
            relative_subspace_error(&OrthoBasis::orthonormalize(&out)?, &OrthoBasis::new_unchecked(exs[i].target.clone()))
        }
    });
    let mut s = 0.0;
    for v in vals {
        s += v?;
    }
    Ok(s / exs.len() as f64)
}

/// Builds a model whose encoder is standardized on `train` and whose output
/// starts at the leading pooled target subspace.
pub fn init_model(train: &SubspaceDataset, config: &TrainConfig) -> Result<RegressorModel> {
    let mut enc = FeatureEncoder::new(config.encoder, train.grid.clone(), train.channels())?;
    enc.fit(&train.features)?;
    let targets: Vec<DMatrix<f64>> = train.targets.iter().map(|t| target_of(t, config)).collect();
    let bias = global_target_basis(&targets, config.r, config.seed)?;
    let mut rng = stream_rng(config.seed, STREAM_INIT);
    RegressorModel::new(enc, &config.hidden, train.ambient_dim(), config.r, config.normalize, Some(&bias), &mut rng)
}

/// Trains with mini-batch Lion. `test` may be empty. Deterministic given
/// the configuration seed.
pub fn train(train: &SubspaceDataset, test: &SubspaceDataset, config: &TrainConfig) -> Result<(RegressorModel, Vec<EpochRecord>)> {
    let model = init_model(train, config)?;
    train_from(model, train, test, config)
}

/// Continues training an existing model.
pub fn train_from(
    mut model: RegressorModel,
    train: &SubspaceDataset,
    test: &SubspaceDataset,
    config: &TrainConfig,
) -> Result<(RegressorModel, Vec<EpochRecord>)> {
    if train.n_samples() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    config.validate(train.target_dim())?;
    model.validate()?;
    let train_ex = examples(&model, train, config, 0)?;
    let test_ex = examples(&model, test, config, STREAM_TEST_PROBE)?;
    let mut opt = Lion::new(model.param_count(), config.beta1, config.beta2, config.weight_decay);
    let mut order: Vec<usize> = (0..train.n_samples()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let k = train.target_dim();
    for epoch in 0..config.epochs {
        order.shuffle(&mut stream_rng(config.seed, STREAM_SHUFFLE + epoch as u64));
        let lr = config.rate_at(epoch);
        let mut sum = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<Example> = idx
                .iter()
                .map(|&i| {
                    let mut ex = train_ex[i].clone();
                    ex.z = probe(config.loss, k, config.seed, STREAM_PROBE + (epoch * order.len() + i) as u64);
                    ex
                })
                .collect();
            let (l, g) = grad_model(&model, &batch, config.loss)?;
            if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::DivergenceDetected(epoch));
            }
            sum += l * idx.len() as f64;
            opt.step(&mut model.params, &g, lr);
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::DivergenceDetected(epoch));
        }
        let train_loss = sum / order.len() as f64;
        let test_loss = batch_loss(&model, &test_ex, config.loss)?;
        let test_metric = example_metric(&model, &test_ex, config.loss)?;
        if !test_loss.is_finite() {
            return Err(Error::DivergenceDetected(epoch));
        }
        log::debug!("epoch {epoch}: train {train_loss:.6e} test {test_loss:.6e} metric {test_metric:.6e}");
        history.push(EpochRecord { epoch, train_loss, test_loss, test_metric });
    }
    Ok((model, history))
}

/// One model per target column trained under Z2.
pub fn train_z2_ensemble(
    train: &SubspaceDataset,
    test: &SubspaceDataset,
    config: &TrainConfig,
) -> Result<(Vec<RegressorModel>, Vec<Vec<EpochRecord>>)> {
    let mut models = Vec::new();
    let mut histories = Vec::new();
    for column in 0..train.target_dim() {
        let cfg = TrainConfig { loss: TrainLoss::Z2, r: 1, column, ..config.clone() };
        let (m, h) = self::train(train, test, &cfg)?;
        models.push(m);
        histories.push(h);
    }
    Ok((models, histories))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use crate::learn::{read_checkpoint, write_checkpoint, Checkpoint};
    use crate::problems::{gen_dataset, DatasetSpec, Preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_model(r: usize, normalize: bool, seed: u64) -> RegressorModel {
        let enc = FeatureEncoder::new(EncoderMode::RawDownsample { factor: 2 }, GridSpec::unit(1, 10), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = RegressorModel::new(enc, &[8, 8], 10, r, normalize, None, &mut rng).unwrap();
        m.params.iter_mut().for_each(|p| *p = 0.5 * rng.sample::<f64, _>(StandardNormal));
        m
    }

    fn tiny_batch(k: usize, seed: u64, stochastic: bool) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..3)
            .map(|_| Example {
                x: (0..5).map(|_| rng.sample(StandardNormal)).collect(),
                target: OrthoBasis::orthonormalize(&DMatrix::from_fn(10, k, |_, _| rng.sample(StandardNormal)))
                    .unwrap()
                    .into_matrix(),
                z: stochastic.then(|| DVector::from_fn(k, |_, _| rng.sample(StandardNormal))),
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (loss, r, k) in [(TrainLoss::L1, 3, 2), (TrainLoss::L2, 3, 2), (TrainLoss::L2Stab, 3, 2), (TrainLoss::Z2, 1, 1)] {
            for normalize in [false, true] {
                let model = tiny_model(r, normalize, 3);
                assert!(model.param_count() <= 1000);
                let batch = tiny_batch(k, 4, matches!(loss, TrainLoss::L2 | TrainLoss::L2Stab));
                let (_, g) = grad_model(&model, &batch, loss).unwrap();
                let eps = 1e-6;
                let mut fd = vec![0.0; g.len()];
                for i in 0..g.len() {
                    let mut p = model.clone();
                    p.params[i] += eps;
                    let lp = batch_loss(&p, &batch, loss).unwrap();
                    p.params[i] -= 2.0 * eps;
                    let lm = batch_loss(&p, &batch, loss).unwrap();
                    fd[i] = (lp - lm) / (2.0 * eps);
                }
                let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!(diff <= 1e-4 * norm, "{loss:?} normalize={normalize}: {diff:e} vs {norm:e}");
            }
        }
    }

    #[test]
    fn duplicated_sample_doubles_sum() {
        let model = tiny_model(3, true, 8);
        let batch = tiny_batch(2, 9, false);
        let (_, g1) = grad_model(&model, &batch[..1], TrainLoss::L1).unwrap();
        let (_, g2) = grad_model(&model, &[batch[0].clone(), batch[0].clone()], TrainLoss::L1).unwrap();
        // Mean reduction: the batch sum (2 × mean) of the doubled batch is twice g1.
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * b - 2.0 * a).abs() <= 1e-14 * (1.0 + a.abs()));
            assert!((b - a).abs() <= 1e-14 * (1.0 + a.abs()));
        }
    }

    fn small_dataset(n: usize, k: usize, seed: u64) -> SubspaceDataset {
        gen_dataset(&DatasetSpec::new(Preset::Elliptic2dIso, n, k, seed).with_grid(8)).unwrap()
    }

    fn quick(loss: TrainLoss, r: usize, epochs: usize) -> TrainConfig {
        TrainConfig {
            hidden: vec![16, 16, 16],
            epochs,
            batch_size: 4,
            learning_rate: 1e-3,
            encoder: EncoderMode::Spectral { modes: 4 },
            ..TrainConfig::new(loss, r, 17)
        }
    }

    #[test]
    fn memorizes_single_sample() {
        let ds = small_dataset(1, 3, 2);
        let cfg = quick(TrainLoss::L1, 3, 500);
        let (_, hist) = train(&ds, &ds, &cfg).unwrap();
        assert!(hist.last().unwrap().train_loss <= 1e-3, "{:?}", hist.last());
        // The initial head reproduces the lone target exactly, a stationary point.
        let exact = init_model(&ds, &cfg).unwrap();
        let ex = examples(&exact, &ds, &cfg, 0).unwrap();
        assert!(batch_loss(&exact, &ex, TrainLoss::L1).unwrap() < 1e-12);
        let (_, g) = grad_model(&exact, &ex, TrainLoss::L1).unwrap();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gn <= 1e-6, "{gn:e}");
    }

    #[test]
    fn zero_rate_keeps_history_constant() {
        let ds = small_dataset(6, 2, 3);
        let (train_ds, test_ds) = ds.split(4);
        let cfg = TrainConfig { learning_rate: 0.0, ..quick(TrainLoss::L1, 4, 5) };
        let (model, hist) = train(&train_ds, &test_ds, &cfg).unwrap();
        assert_eq!(model.params, init_model(&train_ds, &cfg).unwrap().params);
        for h in &hist {
            assert_eq!(h.test_loss, hist[0].test_loss);
            assert!((h.train_loss - hist[0].train_loss).abs() < 1e-12);
            assert!((0.0..=2.0).contains(&h.train_loss));
        }
    }

    #[test]
    fn training_is_reproducible_and_round_trips() {
        let ds = small_dataset(8, 2, 4);
        let (train_ds, test_ds) = ds.split(6);
        for loss in [TrainLoss::L1, TrainLoss::L2Stab] {
            let cfg = quick(loss, 4, 4);
            let (m1, h1) = train(&train_ds, &test_ds, &cfg).unwrap();
            let (m2, h2) = train(&train_ds, &test_ds, &cfg).unwrap();
            assert_eq!(m1, m2);
            assert_eq!(h1, h2);
            assert!(h1.iter().all(|h| h.train_loss.is_finite() && h.test_metric.is_finite()));
        }
        let cfg = quick(TrainLoss::L1, 4, 2);
        let (m, _) = train(&train_ds, &test_ds, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ck = Checkpoint { config: cfg, members: vec![m] };
        write_checkpoint(&ck, dir.path()).unwrap();
        assert_eq!(read_checkpoint(dir.path()).unwrap(), ck);
    }

    #[test]
    fn z2_ensemble_predicts_each_column() {
        let ds = small_dataset(6, 2, 5);
        let (models, hist) = train_z2_ensemble(&ds, &ds, &quick(TrainLoss::Z2, 1, 3)).unwrap();
        assert_eq!(models.len(), 2);
        assert_eq!(hist.len(), 2);
        assert!(models.iter().all(|m| m.r == 1));
    }

    #[test]
    fn blown_up_rate_is_reported() {
        let ds = small_dataset(3, 1, 6);
        let cfg = TrainConfig { learning_rate: 1e308, weight_decay: 10.0, normalize: false, ..quick(TrainLoss::Z2, 1, 5) };
        assert!(matches!(train(&ds, &ds, &cfg), Err(Error::DivergenceDetected(_))));
    }

    #[test]
    fn config_validation() {
        assert!(quick(TrainLoss::L1, 2, 1).validate(3).is_err());
        assert!(quick(TrainLoss::Z2, 2, 1).validate(3).is_err());
        assert!(TrainConfig { batch_size: 0, ..quick(TrainLoss::L1, 3, 1) }.validate(3).is_err());
        quick(TrainLoss::L1, 3, 1).validate(3).unwrap();
        let cfg = TrainConfig { decay: 0.5, decay_every: 10, ..quick(TrainLoss::L1, 3, 1) };
        assert_eq!(cfg.rate_at(25), 1e-3 * 0.25);
    }
}
