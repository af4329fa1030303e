use super::layer::{LayerParams, LayerSpec};
use super::params::ParameterSet;
use super::{mse_gradient, mse_loss, Trainable};
use crate::seed;
use crate::{Error, Result};

/// A feed-forward stack of layers with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequential {
    specs: Vec<LayerSpec>,
    params: ParameterSet,
}

/// Per-layer inputs and pre-activations recorded during a forward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

fn check_chain(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("network needs at least one layer"));
    }
    for s in specs {
        s.validate()?;
    }
    for pair in specs.windows(2) {
        if pair[0].output_len() != pair[1].input_len() {
            return Err(Error::ShapeMismatch {
                expected: pair[1].input_len(),
                got: pair[0].output_len(),
            });
        }
    }
    Ok(())
}

impl Sequential {
    pub fn new(specs: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        check_chain(&specs)?;
        let mut rng = seed::rng(seed);
        let params = ParameterSet {
            layers: specs.iter().map(|s| s.init(&mut rng)).collect(),
        };
        Ok(Sequential { specs, params })
    }

    pub fn from_parts(specs: Vec<LayerSpec>, params: ParameterSet) -> Result<Self> {
        check_chain(&specs)?;
        if !params.matches(&specs) {
            return Err(Error::invalid("parameter shapes do not match layer specs"));
        }
        Ok(Sequential { specs, params })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    pub fn input_len(&self) -> usize {
        self.specs[0].input_len()
    }

    pub fn output_len(&self) -> usize {
        self.specs[self.specs.len() - 1].output_len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward(&self.params, &self.specs, x)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        forward_trace(&self.specs, &self.params.layers, x)
    }

    /// Back-propagates `grad_out` through a recorded trace. Parameter
    /// gradients are added into `grads` (one entry per layer); the gradient
    /// with respect to the network input is returned.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut [LayerParams]) -> Vec<f64> {
        backward(&self.specs, &self.params.layers, trace, grad_out, grads)
    }
}

/// Forward pass over a layer slice, recording what backward needs.
pub fn forward_trace(specs: &[LayerSpec], layers: &[LayerParams], x: &[f64]) -> Result<Trace> {
    let first = specs.first().ok_or_else(|| Error::invalid("empty layer stack"))?;
    if x.len() != first.input_len() {
        return Err(Error::ShapeMismatch {
            expected: first.input_len(),
            got: x.len(),
        });
    }
    let mut trace = Trace::default();
    let mut cur = x.to_vec();
    for (spec, p) in specs.iter().zip(layers) {
        let mut z = Vec::new();
        let mut a = Vec::new();
        spec.forward(p, &cur, &mut z, &mut a);
        trace.inputs.push(cur);
        trace.pre.push(z);
        cur = a;
    }
    trace.output = cur;
    Ok(trace)
}

/// Reverse pass matching [`forward_trace`].
pub fn backward(
    specs: &[LayerSpec],
    layers: &[LayerParams],
    trace: &Trace,
    grad_out: &[f64],
    grads: &mut [LayerParams],
) -> Vec<f64> {
    let mut grad = grad_out.to_vec();
    for l in (0..specs.len()).rev() {
        grad = specs[l].backward(&layers[l], &trace.inputs[l], &trace.pre[l], &grad, &mut grads[l]);
    }
    grad
}

/// Runs `x` through the layers described by `specs` with parameters `params`.
pub fn forward(params: &ParameterSet, specs: &[LayerSpec], x: &[f64]) -> Result<Vec<f64>> {
    forward_layers(specs, &params.layers, x)
}

/// [`forward`] over a slice of layer parameters.
pub fn forward_layers(specs: &[LayerSpec], layers: &[LayerParams], x: &[f64]) -> Result<Vec<f64>> {
    if specs.is_empty() || layers.len() != specs.len() {
        return Err(Error::invalid("parameter set does not match layer specs"));
    }
    if x.len() != specs[0].input_len() {
        return Err(Error::ShapeMismatch {
            expected: specs[0].input_len(),
            got: x.len(),
        });
    }
    let mut cur = x.to_vec();
    let mut z = Vec::new();
    let mut a = Vec::new();
    for (spec, p) in specs.iter().zip(layers) {
        if cur.len() != spec.input_len() || !p.matches(spec) {
            return Err(Error::ShapeMismatch {
                expected: spec.input_len(),
                got: cur.len(),
            });
        }
        spec.forward(p, &cur, &mut z, &mut a);
        std::mem::swap(&mut cur, &mut a);
    }
    Ok(cur)
}

impl Trainable for Sequential {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }

    fn accumulate_gradient(&self, x: &[f64], y: &[f64], grads: &mut ParameterSet) -> Result<f64> {
        let trace = self.forward_trace(x)?;
        let loss = mse_loss(trace.output(), y)?;
        let g = mse_gradient(trace.output(), y)?;
        self.backward(&trace, &g, &mut grads.layers);
        Ok(loss)
    }

    fn parameters(&self) -> &ParameterSet {
        &self.params
    }

    fn parameters_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }
}
