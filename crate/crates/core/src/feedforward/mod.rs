//! Dense feedforward binary classifier: ReLU hidden layers, one sigmoid
//! output, trained with Adam on binary cross-entropy.
//!
//! The detector topology is `[n, 2n, 2n, 1]` for `n` input series. All
//! parameters live in one flat buffer, layer by layer: the weight matrix
//! (row-major, `outputs x inputs`) followed by the bias vector. Gradients
//! use the same layout, which is what [`AdamState`] operates on.

mod adam;
mod chance;
mod train;

pub use adam::{adam_step, AdamState};
pub use chance::{accuracy_threshold, binary_accuracy, chance_accuracy, EXACT_TAIL_LIMIT};
pub use train::{train, write_history_csv, EpochRecord, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before
/// taking logarithms.
pub const PROB_CLAMP: f64 = 1e-7;

/// Logits are limited to this magnitude so the sigmoid output stays strictly
/// inside (0, 1) in double precision.
const LOGIT_LIMIT: f64 = 36.0;

/// Trainable parameters of the `[n, 2n, 2n, 1]` network.
pub fn count_params(n_series: usize) -> usize {
    let h = 2 * n_series;
    n_series * h + h + h * h + h + h + 1
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_LIMIT, LOGIT_LIMIT);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    weights_at: usize,
    biases_at: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

impl MlpModel {
    /// All-zero network with the given layer widths, input first. The last
    /// width must be 1 (the sigmoid output).
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "invalid layer widths {layer_dims:?}"
            )));
        }
        if *layer_dims.last().unwrap() != 1 {
            return Err(Error::InvalidArgument("output layer must have one unit".into()));
        }
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        let mut at = 0;
        for pair in layer_dims.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            layers.push(LayerShape {
                inputs,
                outputs,
                weights_at: at,
                biases_at: at + inputs * outputs,
            });
            at += inputs * outputs + outputs;
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            params: vec![0.0; at],
        })
    }

    /// Network from explicit per-layer weight matrices (`outputs x inputs`)
    /// and bias vectors.
    pub fn from_parts(layer_dims: &[usize], weights: &[Matrix], biases: &[Vec<f64>]) -> Result<Self> {
        let mut model = Self::zeros(layer_dims)?;
        if weights.len() != model.layers.len() || biases.len() != model.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: model.layers.len(),
                found: weights.len().min(biases.len()),
            });
        }
        for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
            let shape = model.layers[l];
            if w.rows() != shape.outputs || w.cols() != shape.inputs {
                return Err(Error::DimensionMismatch {
                    expected: shape.outputs * shape.inputs,
                    found: w.rows() * w.cols(),
                });
            }
            if b.len() != shape.outputs {
                return Err(Error::DimensionMismatch {
                    expected: shape.outputs,
                    found: b.len(),
                });
            }
            model.params[shape.weights_at..shape.biases_at].copy_from_slice(w.as_slice());
            model.params[shape.biases_at..shape.biases_at + shape.outputs].copy_from_slice(b);
        }
        Ok(model)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Row-major `outputs x inputs` weights of layer `l`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.layers[l];
        &self.params[s.weights_at..s.biases_at]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let s = self.layers[l];
        &self.params[s.biases_at..s.biases_at + s.outputs]
    }

    /// Output probability for one row.
    pub fn forward(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row.len())?;
        let mut ws = Workspace::new(self);
        Ok(self.forward_into(row, &mut ws))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_width(x.cols())?;
        let mut ws = Workspace::new(self);
        Ok(x.iter_rows().map(|r| self.forward_into(r, &mut ws)).collect())
    }

    /// Gradient of the mean binary cross-entropy over the batch with respect
    /// to every parameter, in the flat parameter layout.
    pub fn backward(&self, batch_x: &Matrix, batch_y: &[u8]) -> Result<Vec<f64>> {
        self.check_width(batch_x.cols())?;
        if batch_x.rows() != batch_y.len() {
            return Err(Error::DimensionMismatch {
                expected: batch_x.rows(),
                found: batch_y.len(),
            });
        }
        if batch_y.is_empty() {
            return Err(Error::TooFewRows { needed: 1, found: 0 });
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut ws = Workspace::new(self);
        let scale = 1.0 / batch_y.len() as f64;
        for (row, &y) in batch_x.iter_rows().zip(batch_y) {
            self.accumulate_gradient(row, y, scale, &mut ws, &mut grad);
        }
        Ok(grad)
    }

    fn check_width(&self, found: usize) -> Result<()> {
        if found != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found,
            });
        }
        Ok(())
    }

    /// Fills `ws.activations` and returns the output probability.
    pub(crate) fn forward_into(&self, row: &[f64], ws: &mut Workspace) -> f64 {
        ws.activations[0].copy_from_slice(row);
        let last = self.layers.len() - 1;
        for (l, s) in self.layers.iter().enumerate() {
            let (prev, next) = ws.activations.split_at_mut(l + 1);
            let input = &prev[l];
            let output = &mut next[0];
            let w = &self.params[s.weights_at..s.biases_at];
            let b = &self.params[s.biases_at..s.biases_at + s.outputs];
            for (o, out) in output.iter_mut().enumerate() {
                let wo = &w[o * s.inputs..(o + 1) * s.inputs];
                let z = b[o] + wo.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                *out = if l == last { sigmoid(z) } else { z.max(0.0) };
            }
        }
        ws.activations[last + 1][0]
    }

    /// Adds `scale * dLoss/dParams` for one sample into `grad`.
    pub(crate) fn accumulate_gradient(
        &self,
        row: &[f64],
        y: u8,
        scale: f64,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) {
        let p = self.forward_into(row, ws);
        let last = self.layers.len() - 1;
        // d(BCE)/d(logit) for a sigmoid output.
        ws.delta[last][0] = (p - f64::from(y)) * scale;

        for l in (0..=last).rev() {
            let s = self.layers[l];
            let input = &ws.activations[l];
            let (lower, upper) = ws.delta.split_at_mut(l);
            let delta = &upper[0];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[s.weights_at + o * s.inputs..s.weights_at + (o + 1) * s.inputs];
                for (g, a) in gw.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[s.biases_at + o] += d;
            }
            if l > 0 {
                let prev_delta = &mut lower[l - 1];
                let w = &self.params[s.weights_at..s.biases_at];
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    // ReLU derivative, taken as 0 at the kink.
                    if input[i] > 0.0 {
                        *pd = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| w[o * s.inputs + i] * d)
                            .sum();
                    } else {
                        *pd = 0.0;
                    }
                }
            }
        }
    }
}

/// Scratch buffers for forward and backward passes.
pub(crate) struct Workspace {
    activations: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(model: &MlpModel) -> Self {
        Self {
            activations: model.layer_dims.iter().map(|&d| vec![0.0; d]).collect(),
            delta: model.layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

/// `[n, 2n, 2n, 1]` network with fan-in scaled Gaussian weights
/// (std `sqrt(2 / fan_in)` for ReLU layers, `sqrt(1 / fan_in)` for the
/// output) and zero biases.
pub fn init_mlp(n_series: usize, seed: u64) -> Result<MlpModel> {
    if n_series == 0 {
        return Err(Error::InvalidArgument("need at least one input series".into()));
    }
    let h = 2 * n_series;
    let mut model = MlpModel::zeros(&[n_series, h, h, 1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = model.layers.len() - 1;
    for l in 0..model.layers.len() {
        let s = model.layers[l];
        let gain = if l == last { 1.0 } else { 2.0 };
        let std = (gain / s.inputs as f64).sqrt();
        for w in &mut model.params[s.weights_at..s.biases_at] {
            let z: f64 = rng.sample(StandardNormal);
            *w = std * z;
        }
    }
    Ok(model)
}

pub fn forward(model: &MlpModel, row: &[f64]) -> Result<f64> {
    model.forward(row)
}

pub fn backward(model: &MlpModel, batch_x: &Matrix, batch_y: &[u8]) -> Result<Vec<f64>> {
    model.backward(batch_x, batch_y)
}

/// Mean binary cross-entropy with predictions clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn bce_loss(predicted: &[f64], actual: &[u8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: predicted.len(),
            found: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    let total: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / predicted.len() as f64)
}
