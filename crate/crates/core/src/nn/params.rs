use serde::{Deserialize, Serialize};

use super::layer::{LayerParams, LayerSpec};

/// Trainable weights and biases of a stack of layers, in layer order.
///
/// The same type doubles as a gradient buffer.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<LayerParams>,
}

impl ParameterSet {
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        ParameterSet {
            layers: specs.iter().map(LayerParams::zeros).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ParameterSet {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn total_count(&self) -> usize {
        self.layers.iter().map(LayerParams::len).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(LayerParams::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(LayerParams::values_mut)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    /// Overwrites all values from a flat slice in layer order.
    pub fn copy_from_flat(&mut self, flat: &[f64]) -> bool {
        if flat.len() != self.total_count() {
            return false;
        }
        for (dst, src) in self.values_mut().zip(flat) {
            *dst = *src;
        }
        true
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ParameterSet) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.values_mut() {
            *v *= s;
        }
    }

    pub fn matches(&self, specs: &[LayerSpec]) -> bool {
        self.layers.len() == specs.len() && self.layers.iter().zip(specs).all(|(p, s)| p.matches(s))
    }
}
