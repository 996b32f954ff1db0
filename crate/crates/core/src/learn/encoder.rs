use serde::{Deserialize, Serialize};

use crate::fields::{sine_coefficients, FieldSample, GridSpec};
use crate::{Error, Result};

/// How a sample's channels are turned into a fixed-length vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum EncoderMode {
    /// Every `factor`-th node along each axis.
    RawDownsample { factor: usize },
    /// The lowest `modes` sine coefficients along each axis.
    Spectral { modes: usize },
}

impl Default for EncoderMode {
    fn default() -> Self {
        EncoderMode::Spectral { modes: 12 }
    }
}

/// Encoder plus a per-entry standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureEncoder {
    pub mode: EncoderMode,
    pub grid: GridSpec,
    pub channels: usize,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureEncoder {
    pub fn new(mode: EncoderMode, grid: GridSpec, channels: usize) -> Result<Self> {
        match mode {
            EncoderMode::RawDownsample { factor: 0 } | EncoderMode::Spectral { modes: 0 } => {
                return Err(Error::InvalidArgument("encoder factor and mode count must be positive".into()))
            }
            _ => {}
        }
        if channels == 0 {
            return Err(Error::InvalidArgument("encoder needs at least one channel".into()));
        }
        let mut enc = Self { mode, grid, channels, shift: Vec::new(), scale: Vec::new() };
        let len = enc.output_len();
        enc.shift = vec![0.0; len];
        enc.scale = vec![1.0; len];
        Ok(enc)
    }

    /// Retained entries along each axis.
    fn kept(&self) -> Vec<usize> {
        self.grid
            .extents
            .iter()
            .map(|&n| match self.mode {
                EncoderMode::RawDownsample { factor } => n.div_ceil(factor),
                EncoderMode::Spectral { modes } => modes.min(n),
            })
            .collect()
    }

    pub fn output_len(&self) -> usize {
        self.channels * self.kept().iter().product::<usize>()
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.grid.len()
    }

    fn encode_unscaled(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_len() {
            return Err(Error::DimensionMismatch(format!(
                "feature length {} != {} expected by the encoder",
                features.len(),
                self.input_len()
            )));
        }
        let n = self.grid.len();
        let kept = self.kept();
        let per = kept.iter().product::<usize>();
        let mut out = Vec::with_capacity(self.channels * per);
        for c in 0..self.channels {
            let chunk = &features[c * n..(c + 1) * n];
            let (source, step) = match self.mode {
                EncoderMode::RawDownsample { factor } => (chunk.to_vec(), factor),
                EncoderMode::Spectral { .. } => {
                    (sine_coefficients(&FieldSample { grid: self.grid.clone(), values: chunk.to_vec() }), 1)
                }
            };
            for t in 0..per {
                let mut idx = [0usize; 3];
                let mut rem = t;
                for (a, &k) in kept.iter().enumerate() {
                    idx[a] = (rem % k) * step;
                    rem /= k;
                }
                out.push(source[self.grid.flatten(&idx[..self.grid.dim()])]);
            }
        }
        Ok(out)
    }

    /// Sets the standardization from a set of raw feature vectors.
    pub fn fit(&mut self, samples: &[Vec<f64>]) -> Result<()> {
        let encoded = samples.iter().map(|s| self.encode_unscaled(s)).collect::<Result<Vec<_>>>()?;
        let len = self.output_len();
        let m = encoded.len().max(1) as f64;
        for j in 0..len {
            let mean = encoded.iter().map(|e| e[j]).sum::<f64>() / m;
            let var = encoded.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / m;
            self.shift[j] = mean;
            self.scale[j] = if var.sqrt() > 1e-12 * (1.0 + mean.abs()) { 1.0 / var.sqrt() } else { 1.0 };
        }
        Ok(())
    }

    pub fn encode(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut e = self.encode_unscaled(features)?;
        for ((v, s), c) in e.iter_mut().zip(&self.shift).zip(&self.scale) {
            *v = (*v - s) * c;
        }
        Ok(e)
    }
}
