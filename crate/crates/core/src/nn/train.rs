use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{dataset_loss, gradients, Sample, Trainable};
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 30,
            patience: 10,
            learning_rate: 1e-3,
            minibatch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be >= 1"));
        }
        if self.patience > self.max_epochs {
            return Err(Error::invalid("patience must not exceed max_epochs"));
        }
        if self.minibatch_size == 0 {
            return Err(Error::invalid("minibatch_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be a positive finite number"));
        }
        Ok(())
    }
}

/// Per-epoch training and validation losses. `best_epoch` is 1-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
    pub best_epoch: usize,
}

impl LossCurve {
    pub fn epochs(&self) -> usize {
        self.train.len()
    }

    pub fn best_val(&self) -> Option<f64> {
        self.best_epoch.checked_sub(1).map(|i| self.val[i])
    }
}

/// Minibatch SGD with early stopping on `val_set`.
///
/// Training stops after `max_epochs`, or once the validation loss has not
/// improved for `patience` consecutive epochs (`patience == 0` disables early
/// stopping). The parameters of the best validation epoch are restored.
pub fn train<M: Trainable>(
    model: &mut M,
    train_set: &[Sample<'_>],
    val_set: &[Sample<'_>],
    cfg: &TrainConfig,
) -> Result<LossCurve> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if val_set.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }

    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.minibatch_size);
    let mut curve = LossCurve::default();
    let mut best = (f64::INFINITY, model.parameters().clone());

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.minibatch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i]));
            let (loss, grad) = gradients(model, &batch).map_err(|e| at_epoch(e, epoch))?;
            model.parameters_mut().axpy(-cfg.learning_rate, &grad);
            epoch_loss += loss * chunk.len() as f64;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = dataset_loss(model, val_set).map_err(|e| at_epoch(e, epoch))?;
        if !train_loss.is_finite() || !val_loss.is_finite() || !model.parameters().is_finite() {
            return Err(Error::Numerical {
                epoch,
                reason: "loss diverged".into(),
            });
        }
        curve.train.push(train_loss);
        curve.val.push(val_loss);

        if val_loss < best.0 {
            best = (val_loss, model.parameters().clone());
            curve.best_epoch = epoch;
        } else if cfg.patience > 0 && epoch - curve.best_epoch >= cfg.patience {
            log::debug!("early stop at epoch {epoch}, best epoch {}", curve.best_epoch);
            break;
        }
    }
    *model.parameters_mut() = best.1;
    Ok(curve)
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Numerical { reason, .. } => Error::Numerical { epoch, reason },
        other => other,
    }
}
