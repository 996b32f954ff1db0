use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Predictor, RegressorModel, TrainConfig};
use crate::problems::io::{read_f64s, write_f64s};
use crate::{Error, Result};

pub const MODEL_MAGIC: &str = "SUBREG-MODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const PARAMS_FILE: &str = "params.f64";

/// Trained models with the configuration that produced them. Z2 training
/// stores one member per target column; other losses store one member.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub members: Vec<RegressorModel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    magic: String,
    format_version: u32,
    config: TrainConfig,
    members: Vec<RegressorModel>,
    param_counts: Vec<usize>,
}

impl Predictor for Checkpoint {
    fn predict(&self, features: &[f64]) -> Result<DMatrix<f64>> {
        match self.members.as_slice() {
            [one] => one.predict(features),
            many => many.predict(features),
        }
    }
}

pub fn write_checkpoint(ck: &Checkpoint, dir: &Path) -> Result<Vec<PathBuf>> {
    for m in &ck.members {
        m.validate()?;
    }
    fs::create_dir_all(dir)?;
    let meta = CheckpointMeta {
        magic: MODEL_MAGIC.into(),
        format_version: MODEL_FORMAT_VERSION,
        config: ck.config.clone(),
        members: ck.members.clone(),
        param_counts: ck.members.iter().map(|m| m.params.len()).collect(),
    };
    let paths = vec![dir.join("meta.json"), dir.join(PARAMS_FILE)];
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&paths[0], text)?;
    write_f64s(&paths[1], ck.members.iter().flat_map(|m| m.params.iter().copied()))?;
    Ok(paths)
}

pub fn read_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(dir.join("meta.json"))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::CorruptHeader(format!("meta.json is not JSON: {e}")))?;
    if value.get("magic").and_then(|m| m.as_str()) != Some(MODEL_MAGIC) {
        return Err(Error::CorruptHeader("missing or wrong model magic".into()));
    }
    let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(Error::FormatVersionMismatch { found: version as u32, expected: MODEL_FORMAT_VERSION });
    }
    let mut meta: CheckpointMeta = serde_json::from_value(value).map_err(|e| Error::CorruptHeader(e.to_string()))?;
    if meta.param_counts.len() != meta.members.len() {
        return Err(Error::CorruptHeader("parameter count list does not match members".into()));
    }
    let total = meta.param_counts.iter().sum();
    let params = read_f64s(&dir.join(PARAMS_FILE), total)?;
    let mut off = 0;
    for (m, &c) in meta.members.iter_mut().zip(&meta.param_counts) {
        m.params = params[off..off + c].to_vec();
        off += c;
        m.validate().map_err(|e| Error::CorruptHeader(e.to_string()))?;
    }
    Ok(Checkpoint { config: meta.config, members: meta.members })
}
