use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector, DVectorView};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::FeatureEncoder;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: [usize; 3] = [256, 256, 256];

/// Fully connected tanh network whose output is read as an n×r basis matrix.
///
/// Parameters are stored layer by layer: the weight matrix row-major
/// (outputs × inputs), then the bias. The output vector fills the basis
/// matrix column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub encoder: FeatureEncoder,
    pub hidden: Vec<usize>,
    pub n: usize,
    pub r: usize,
    pub normalize: bool,
    #[serde(skip)]
    pub params: Vec<f64>,
}

/// Intermediate activations of one forward pass.
pub(crate) struct Trace {
    /// Layer inputs: the encoded features, then each hidden activation.
    inputs: Vec<DVector<f64>>,
    /// Raw output before column normalization.
    raw: DMatrix<f64>,
}

impl RegressorModel {
    /// Hidden layers get N(0, 1/fan-in) weights; the final layer starts at
    /// zero with `bias` (or a random matrix when absent) as its bias.
    pub fn new<R: Rng + ?Sized>(
        encoder: FeatureEncoder,
        hidden: &[usize],
        n: usize,
        r: usize,
        normalize: bool,
        bias: Option<&DMatrix<f64>>,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 || r == 0 || hidden.contains(&0) {
            return Err(Error::InvalidArgument("network dimensions must be positive".into()));
        }
        let mut model = Self { encoder, hidden: hidden.to_vec(), n, r, normalize, params: Vec::new() };
        let widths = model.widths();
        let mut params = Vec::with_capacity(model.param_count());
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let last = l + 2 == widths.len();
            let sd = (1.0 / fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(if last { 0.0 } else { sd * rng.sample::<f64, _>(StandardNormal) });
            }
            if last {
                match bias {
                    Some(b) => {
                        if b.shape() != (n, r) {
                            return Err(Error::DimensionMismatch(format!("bias basis {:?} != ({n}, {r})", b.shape())));
                        }
                        params.extend(b.iter().copied());
                    }
                    None => params.extend((0..n * r).map(|_| rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt())),
                }
            } else {
                params.extend(std::iter::repeat_n(0.0, fan_out));
            }
        }
        model.params = params;
        Ok(model)
    }

    /// Layer widths from encoded input to flattened output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.encoder.output_len()];
        w.extend(&self.hidden);
        w.push(self.n * self.r);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for an architecture with {}",
                self.params.len(),
                self.param_count()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Offsets of each layer's weight block.
    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for w in self.widths().windows(2) {
            off.push(off.last().unwrap() + w[0] * w[1] + w[1]);
        }
        off
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let widths = self.widths();
        let offsets = self.offsets();
        let mut inputs = vec![DVector::from_column_slice(x)];
        let mut out = DVector::zeros(0);
        for l in 0..widths.len() - 1 {
            let (fi, fo) = (widths[l], widths[l + 1]);
            let w = DMatrixView::from_slice(&self.params[offsets[l]..offsets[l] + fi * fo], fi, fo);
            let b = DVectorView::from_slice(&self.params[offsets[l] + fi * fo..offsets[l + 1]], fo);
            let z = w.tr_mul(&inputs[l]) + b;
            if l + 2 == widths.len() {
                out = z;
            } else {
                inputs.push(z.map(f64::tanh));
            }
        }
        Trace { inputs, raw: DMatrix::from_column_slice(self.n, self.r, out.as_slice()) }
    }

    fn normalized(&self, raw: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = raw.clone();
        if self.normalize {
            for mut c in m.column_iter_mut() {
                let nrm = c.norm();
                if nrm > 0.0 {
                    c /= nrm;
                }
            }
        }
        m
    }

    pub(crate) fn output(&self, trace: &Trace) -> DMatrix<f64> {
        self.normalized(&trace.raw)
    }

    /// Output for an already encoded feature vector.
    pub fn forward_encoded(&self, x: &[f64]) -> DMatrix<f64> {
        self.normalized(&self.trace(x).raw)
    }

    /// Output basis matrix (n×r) for a raw feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.forward_encoded(&self.encoder.encode(features)?))
    }

    /// Adds the parameter gradient for output sensitivity `d_out` (w.r.t. the
    /// normalized output) into `grad`.
    pub(crate) fn backward(&self, trace: &Trace, d_out: &DMatrix<f64>, grad: &mut [f64]) {
        let widths = self.widths();
        let offsets = self.offsets();
        let mut delta = d_out.clone();
        if self.normalize {
            for (mut d, raw) in delta.column_iter_mut().zip(trace.raw.column_iter()) {
                let nrm = raw.norm();
                if nrm > 0.0 {
                    let u = raw / nrm;
                    let proj = u.dot(&d);
                    d -= u * proj;
                    d /= nrm;
                }
            }
        }
        let mut delta = DVector::from_column_slice(delta.as_slice());
        for l in (0..widths.len() - 1).rev() {
            let (fi, fo) = (widths[l], widths[l + 1]);
            let (wg, bg) = grad[offsets[l]..offsets[l + 1]].split_at_mut(fi * fo);
            DMatrixViewMut::from_slice(wg, fi, fo).ger(1.0, &trace.inputs[l], &delta, 1.0);
            for (g, d) in bg.iter_mut().zip(delta.iter()) {
                *g += d;
            }
            if l > 0 {
                let w = DMatrixView::from_slice(&self.params[offsets[l]..offsets[l] + fi * fo], fi, fo);
                let back = w * &delta;
                delta = back.zip_map(&trace.inputs[l], |g, a| g * (1.0 - a * a));
            }
        }
    }
}
