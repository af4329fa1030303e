use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Shape and activation of one layer.
///
/// Dense weights are stored row-major as `(outputs, inputs)`. Conv1d inputs are
/// laid out `(steps, channels)` row-major, weights as `(filters, kernel,
/// channels)`, and outputs as `(steps - kernel + 1, filters)`. Stride is 1 and
/// there is no padding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    Conv1d {
        steps: usize,
        channels: usize,
        filters: usize,
        kernel: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            inputs,
            outputs,
            activation,
        }
    }

    pub fn conv1d(
        steps: usize,
        channels: usize,
        filters: usize,
        kernel: usize,
        activation: Activation,
    ) -> Self {
        LayerSpec::Conv1d {
            steps,
            channels,
            filters,
            kernel,
            activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => {
                if inputs == 0 || outputs == 0 {
                    return Err(Error::invalid("dense layer needs inputs >= 1 and outputs >= 1"));
                }
            }
            LayerSpec::Conv1d {
                steps,
                channels,
                filters,
                kernel,
                ..
            } => {
                if channels == 0 || filters == 0 {
                    return Err(Error::invalid("conv1d layer needs channels >= 1 and filters >= 1"));
                }
                if kernel == 0 || kernel > steps {
                    return Err(Error::invalid(format!(
                        "conv1d kernel {kernel} outside 1..={steps}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Conv1d {
                steps, channels, ..
            } => steps * channels,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } => outputs,
            LayerSpec::Conv1d {
                steps,
                filters,
                kernel,
                ..
            } => (steps + 1 - kernel) * filters,
        }
    }

    pub fn weight_len(&self) -> usize {
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => inputs * outputs,
            LayerSpec::Conv1d {
                channels,
                filters,
                kernel,
                ..
            } => filters * kernel * channels,
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } => outputs,
            LayerSpec::Conv1d { filters, .. } => filters,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_len() + self.bias_len()
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv1d { activation, .. } => activation,
        }
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => (inputs, outputs),
            LayerSpec::Conv1d {
                channels,
                filters,
                kernel,
                ..
            } => (kernel * channels, kernel * filters),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(&self, rng: &mut Rng) -> LayerParams {
        let (fan_in, fan_out) = self.fans();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..self.weight_len())
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        LayerParams {
            weights,
            bias: vec![0.0; self.bias_len()],
        }
    }

    /// Computes pre-activations `z` and activations `a` for one input.
    pub(crate) fn forward(&self, p: &LayerParams, x: &[f64], z: &mut Vec<f64>, a: &mut Vec<f64>) {
        z.clear();
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => {
                z.reserve(outputs);
                for o in 0..outputs {
                    let row = &p.weights[o * inputs..(o + 1) * inputs];
                    let dot: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
                    z.push(dot + p.bias[o]);
                }
            }
            LayerSpec::Conv1d {
                steps,
                channels,
                filters,
                kernel,
                ..
            } => {
                let out_steps = steps + 1 - kernel;
                let span = kernel * channels;
                z.reserve(out_steps * filters);
                for s in 0..out_steps {
                    let window = &x[s * channels..s * channels + span];
                    for f in 0..filters {
                        let w = &p.weights[f * span..(f + 1) * span];
                        let dot: f64 = w.iter().zip(window).map(|(w, v)| w * v).sum();
                        z.push(dot + p.bias[f]);
                    }
                }
            }
        }
        let act = self.activation();
        a.clear();
        a.extend(z.iter().map(|&v| act.apply(v)));
    }

    /// Back-propagates `grad_a` (dL/d activation) through the layer. Adds
    /// parameter gradients into `g` and returns dL/d input.
    pub(crate) fn backward(
        &self,
        p: &LayerParams,
        x: &[f64],
        z: &[f64],
        grad_a: &[f64],
        g: &mut LayerParams,
    ) -> Vec<f64> {
        let act = self.activation();
        let delta: Vec<f64> = grad_a
            .iter()
            .zip(z)
            .map(|(ga, &zv)| ga * act.derivative(zv))
            .collect();
        let mut grad_x = vec![0.0; x.len()];
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => {
                for (o, &d) in delta.iter().enumerate().take(outputs) {
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    let row = &p.weights[o * inputs..(o + 1) * inputs];
                    let grow = &mut g.weights[o * inputs..(o + 1) * inputs];
                    for i in 0..inputs {
                        grow[i] += d * x[i];
                        grad_x[i] += d * row[i];
                    }
                }
            }
            LayerSpec::Conv1d {
                steps,
                channels,
                filters,
                kernel,
                ..
            } => {
                let out_steps = steps + 1 - kernel;
                let span = kernel * channels;
                for s in 0..out_steps {
                    let base = s * channels;
                    for f in 0..filters {
                        let d = delta[s * filters + f];
                        if d == 0.0 {
                            continue;
                        }
                        g.bias[f] += d;
                        let w = &p.weights[f * span..(f + 1) * span];
                        let gw = &mut g.weights[f * span..(f + 1) * span];
                        for j in 0..span {
                            gw[j] += d * x[base + j];
                            grad_x[base + j] += d * w[j];
                        }
                    }
                }
            }
        }
        grad_x
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(spec: &LayerSpec) -> Self {
        LayerParams {
            weights: vec![0.0; spec.weight_len()],
            bias: vec![0.0; spec.bias_len()],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    pub(crate) fn matches(&self, spec: &LayerSpec) -> bool {
        self.weights.len() == spec.weight_len() && self.bias.len() == spec.bias_len()
    }
}
