//! Minimal feed-forward engine: dense and 1-D convolution layers, L2 loss,
//! back-propagation and minibatch SGD with early stopping.

mod layer;
mod params;
mod sequential;
mod train;

use rayon::prelude::*;

pub use layer::{Activation, LayerParams, LayerSpec};
pub use params::ParameterSet;
pub use sequential::{backward, forward, forward_layers, forward_trace, Sequential, Trace};
pub use train::{train, LossCurve, TrainConfig};

use crate::{Error, Result};

/// Samples per gradient work unit. Chunk boundaries are fixed so the summed
/// gradient does not depend on the number of worker threads.
const GRADIENT_CHUNK: usize = 4;

/// One labelled example, borrowed from whatever owns the data.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
}

impl<'a> Sample<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        Sample { x, y }
    }
}

/// A model that can be fitted with [`train`].
pub trait Trainable: Clone + Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Adds the gradient of the single-sample loss into `grads` and returns
    /// the loss.
    fn accumulate_gradient(&self, x: &[f64], y: &[f64], grads: &mut ParameterSet) -> Result<f64>;

    fn parameters(&self) -> &ParameterSet;

    fn parameters_mut(&mut self) -> &mut ParameterSet;

    fn param_count(&self) -> usize {
        self.parameters().total_count()
    }
}

/// Mean of squared per-dimension errors.
pub fn mse_loss(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("empty label vector"));
    }
    let sse: f64 = y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / y.len() as f64)
}

/// d mse / d y_hat
pub(crate) fn mse_gradient(y_hat: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if y_hat.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if y_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            epoch: 0,
            reason: "non-finite activation".into(),
        });
    }
    let n = y.len() as f64;
    Ok(y_hat.iter().zip(y).map(|(a, b)| 2.0 * (a - b) / n).collect())
}

/// Per-sample losses in input order.
pub fn sample_losses<M: Trainable>(model: &M, data: &[Sample<'_>]) -> Result<Vec<f64>> {
    data.par_iter()
        .map(|s| mse_loss(&model.predict(s.x)?, s.y))
        .collect()
}

/// Average per-sample L2 loss over a dataset.
pub fn dataset_loss<M: Trainable>(model: &M, data: &[Sample<'_>]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("dataset loss over an empty dataset"));
    }
    let losses = sample_losses(model, data)?;
    Ok(losses.iter().sum::<f64>() / data.len() as f64)
}

/// Mean minibatch loss and its gradient with respect to every parameter.
pub fn gradients<M: Trainable>(model: &M, batch: &[Sample<'_>]) -> Result<(f64, ParameterSet)> {
    if batch.is_empty() {
        return Err(Error::invalid("gradient of an empty minibatch"));
    }
    let partials: Vec<(f64, ParameterSet)> = batch
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| {
            let mut g = model.parameters().zeros_like();
            let mut loss = 0.0;
            for s in chunk {
                loss += model.accumulate_gradient(s.x, s.y, &mut g)?;
            }
            Ok((loss, g))
        })
        .collect::<Result<_>>()?;
    let mut iter = partials.into_iter();
    let (mut loss, mut total) = iter.next().expect("nonempty batch");
    for (l, g) in iter {
        loss += l;
        total.axpy(1.0, &g);
    }
    let n = batch.len() as f64;
    total.scale(1.0 / n);
    if !total.is_finite() {
        return Err(Error::Numerical {
            epoch: 0,
            reason: "non-finite gradient".into(),
        });
    }
    Ok((loss / n, total))
}
