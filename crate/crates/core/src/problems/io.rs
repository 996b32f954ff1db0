//! Dataset container: a directory with `meta.json`, `features.f64` and
//! `targets.f64`. Payloads are little-endian float64, sample-major; each
//! target is stored row-major as an n×k matrix.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fields::GridSpec;
use crate::grassmann::OrthoBasis;
use crate::problems::{DatasetSpec, SubspaceDataset};
use crate::{Error, Result};

pub const DATASET_MAGIC: &str = "SUBREG-DATASET";
pub const FORMAT_VERSION: u32 = 1;
pub const META_FILE: &str = "meta.json";
pub const FEATURES_FILE: &str = "features.f64";
pub const TARGETS_FILE: &str = "targets.f64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub magic: String,
    pub format_version: u32,
    pub spec: DatasetSpec,
    pub grid: GridSpec,
    pub n_samples: usize,
    pub channels: usize,
    pub ambient_dim: usize,
    pub target_dim: usize,
}

pub(crate) fn write_f64s(path: &Path, data: impl Iterator<Item = f64>) -> Result<()> {
    let bytes: Vec<u8> = data.flat_map(f64::to_le_bytes).collect();
    fs::write(path, bytes)?;
    Ok(())
}

pub(crate) fn read_f64s(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    let want = (expected * 8) as u64;
    let found = bytes.len() as u64;
    if found < want {
        let file = path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned());
        return Err(Error::TruncatedPayload { file, expected: want, found });
    }
    if found > want {
        return Err(Error::CorruptHeader(format!("{} holds {found} bytes, header implies {want}", path.display())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

/// Writes the dataset into `dir` (created if missing) and returns the files written.
pub fn write_dataset(ds: &SubspaceDataset, dir: &Path) -> Result<Vec<PathBuf>> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let meta = DatasetMeta {
        magic: DATASET_MAGIC.into(),
        format_version: FORMAT_VERSION,
        spec: ds.spec.clone(),
        grid: ds.grid.clone(),
        n_samples: ds.n_samples(),
        channels: ds.channels(),
        ambient_dim: ds.ambient_dim(),
        target_dim: ds.target_dim(),
    };
    let paths = [dir.join(META_FILE), dir.join(FEATURES_FILE), dir.join(TARGETS_FILE)];
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&paths[0], text)?;
    write_f64s(&paths[1], ds.features.iter().flat_map(|f| f.iter().copied()))?;
    write_f64s(
        &paths[2],
        ds.targets.iter().flat_map(|t| {
            let m = t.matrix();
            (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
        }),
    )?;
    Ok(paths.to_vec())
}

/// Reads and validates the header only.
pub fn read_meta(dir: &Path) -> Result<DatasetMeta> {
    let text = fs::read_to_string(dir.join(META_FILE))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::CorruptHeader(format!("meta.json is not JSON: {e}")))?;
    if value.get("magic").and_then(|m| m.as_str()) != Some(DATASET_MAGIC) {
        return Err(Error::CorruptHeader("missing or wrong magic".into()));
    }
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptHeader("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::FormatVersionMismatch { found: version as u32, expected: FORMAT_VERSION });
    }
    let meta: DatasetMeta = serde_json::from_value(value).map_err(|e| Error::CorruptHeader(e.to_string()))?;
    if meta.channels != meta.spec.channels() || meta.n_samples != meta.spec.n_samples {
        return Err(Error::CorruptHeader("channel or sample count disagrees with the generator spec".into()));
    }
    Ok(meta)
}

pub fn read_dataset(dir: &Path) -> Result<SubspaceDataset> {
    let meta = read_meta(dir)?;
    let flen = meta.channels * meta.grid.len();
    let tlen = meta.ambient_dim * meta.target_dim;
    let features = read_f64s(&dir.join(FEATURES_FILE), meta.n_samples * flen)?;
    let targets = read_f64s(&dir.join(TARGETS_FILE), meta.n_samples * tlen)?;
    let features = features.chunks(flen.max(1)).take(meta.n_samples).map(|c| c.to_vec()).collect();
    let targets = (0..meta.n_samples)
        .map(|s| {
            let chunk = &targets[s * tlen..(s + 1) * tlen];
            OrthoBasis::new(DMatrix::from_row_slice(meta.ambient_dim, meta.target_dim, chunk))
                .map_err(|e| Error::CorruptHeader(format!("target {s}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let ds = SubspaceDataset { spec: meta.spec, grid: meta.grid, features, targets };
    ds.validate()?;
    Ok(ds)
}
