use std::path::Path;

use serde::{Deserialize, Serialize};
use subreg_core::problems::{gen_dataset, write_dataset, DatasetSpec, FourierPhase, Preset};

use crate::config::Loaded;
use crate::error::CliResult;
use crate::output::OutDir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub n_samples: usize,
    pub m_target: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub n_controls: Option<usize>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub phase: Option<FourierPhase>,
}

impl GenConfig {
    pub fn spec(&self) -> DatasetSpec {
        let mut s = DatasetSpec::new(self.preset, self.n_samples, self.m_target, self.seed);
        s.grid_n = self.grid_n;
        if let Some(c) = self.n_controls {
            s.n_controls = c;
        }
        if let Some(w) = self.omega {
            s.omega = w;
        }
        if let Some(p) = self.phase {
            s.phase = p;
        }
        s
    }
}

pub fn run(cfg: &Loaded<GenConfig>, out: &Path) -> CliResult<()> {
    let spec = cfg.config.spec();
    spec.grid()?;
    let mut dir = OutDir::open(out)?;
    log::info!("generating {} samples of preset {}", spec.n_samples, spec.preset);
    let ds = gen_dataset(&spec)?;
    let files = write_dataset(&ds, dir.root())?;
    dir.record(files);
    dir.finish("gen", &cfg.value, &cfg.hash)?;
    Ok(())
}
