//! Regressors from input fields to subspaces: feature encoding, a dense
//! network trained with subspace losses, normal-coordinate interpolation and
//! evaluation.

mod checkpoint;
mod encoder;
mod eval;
mod interp;
mod mlp;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, MODEL_FORMAT_VERSION, MODEL_MAGIC, PARAMS_FILE};
pub use encoder::{EncoderMode, FeatureEncoder};
pub use eval::{evaluate, EvalMetric, EvalSummary, NormalCoordInterpolator, Predictor};
pub use interp::{interpolate_normal_coords, nearest_neighbors, KernelParams};
pub use mlp::{RegressorModel, DEFAULT_HIDDEN};
pub use train::{
    batch_loss, example_metric, examples, global_target_basis, grad_model, init_model, train, train_from,
    train_z2_ensemble, EpochRecord, Example, Lion, TrainConfig, TrainLoss,
};
