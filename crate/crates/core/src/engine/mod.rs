//! The budgeted active-learning query loop and its passive baseline.
//!
//! A run starts from a network already trained on the available set. Each
//! iteration queries one batch from the candidate pool, trains on it, and
//! removes each queried point from the pool with probability `delta`. The
//! chosen set only counts unique points, so re-queries (possible when
//! `delta < 1`) are trained on again without consuming budget.

mod metrics;
mod replay;
mod run;
mod state;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetSplits, PredictionType};
use crate::embedding::EncoderId;
use crate::nn::{LossCurve, TrainConfig};
use crate::selection::QueryVariant;
use crate::{Error, Result};

pub use metrics::{accuracy, compute_usage, percent, Usage};
pub use replay::{replay_sequence, shuffled_batches, ReplaySetup, ReplayTrace};
pub use run::{pretrain, remove_at_rate, run_adl, run_adl_observed, run_pdl, run_pdl_observed};
pub use state::EngineState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdlConfig {
    pub n_budget: usize,
    pub n_iter: usize,
    pub n_batch: usize,
    pub delta: f64,
    pub variant: QueryVariant,
    pub variable: EncoderId,
    pub seed: u64,
    /// Candidates are subsampled uniformly to this size before encoding.
    pub pool_cap: Option<usize>,
    /// Train on the whole chosen set each iteration instead of the new batch.
    pub cumulative_training: bool,
    /// Skip all training; embeddings stay fixed.
    pub freeze_model: bool,
    /// Allows the true-label variable, which reads candidate labels.
    pub oracle_mode: bool,
}

pub const DEFAULT_ITERATIONS: usize = 10;

impl AdlConfig {
    /// Budget of half the pool, ten iterations and batches of a tenth of the
    /// budget. The budget is rounded down to a multiple of the iteration count.
    pub fn for_pool(pool_len: usize, delta: f64, variant: QueryVariant, variable: EncoderId, seed: u64) -> Self {
        let n_iter = DEFAULT_ITERATIONS;
        let n_batch = pool_len / 2 / n_iter;
        AdlConfig {
            n_budget: n_batch * n_iter,
            n_iter,
            n_batch,
            delta,
            variant,
            variable,
            seed,
            pool_cap: None,
            cumulative_training: false,
            freeze_model: false,
            oracle_mode: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("delta", format!("{} is outside [0, 1]", self.delta)));
        }
        if self.n_budget > 0 && self.n_batch == 0 {
            return Err(Error::config("n_batch", "must be at least 1 when the budget is positive"));
        }
        if self.n_iter.checked_mul(self.n_batch).is_none_or(|b| b > self.n_budget) {
            return Err(Error::config(
                "n_batch",
                format!(
                    "n_iter * n_batch = {} * {} exceeds n_budget = {}",
                    self.n_iter, self.n_batch, self.n_budget
                ),
            ));
        }
        if self.pool_cap == Some(0) {
            return Err(Error::config("pool_cap", "must be at least 1"));
        }
        if self.variable == EncoderId::TrueLabel && !self.oracle_mode {
            return Err(Error::config("variable", "the true-label variable requires oracle_mode"));
        }
        Ok(())
    }
}

/// Everything a run reads but never mutates.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    /// Normalized dataset.
    pub dataset: &'a Dataset,
    pub splits: &'a DatasetSplits,
    /// Selects the candidate partition used as pool.
    pub prediction_type: PredictionType,
    /// Per-iteration training; its seed is replaced by a derived one.
    pub train: &'a TrainConfig,
}

impl Problem<'_> {
    pub fn pool(&self) -> &[usize] {
        self.splits.partition(self.prediction_type)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Adl { variable: EncoderId, variant: QueryVariant },
    Pdl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// 1-based.
    pub iteration: usize,
    /// Point ids in selection order.
    pub queried: Vec<usize>,
    pub fresh: usize,
    pub repeats: usize,
    /// Selection fell back to uniform sampling.
    pub fallback: bool,
    pub pool_before: usize,
    pub pool_after: usize,
    pub c_budget: usize,
    /// `None` when the model is frozen.
    pub curve: Option<LossCurve>,
    /// Loss on initial candidates not yet chosen; `None` once all are chosen.
    pub val_loss_unqueried: Option<f64>,
    pub val_loss_all_candidates: f64,
}

impl IterationLog {
    /// Training loss at the restored epoch.
    pub fn train_loss(&self) -> Option<f64> {
        let c = self.curve.as_ref()?;
        c.best_epoch.checked_sub(1).map(|i| c.train[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub prediction_type: PredictionType,
    pub method: Method,
    pub delta: f64,
    pub seed: u64,
    pub n_budget: usize,
    pub data_pct: f64,
    pub sensors_pct: f64,
    /// Mean loss on candidates never queried, before any query.
    pub initial_test_loss: f64,
    /// Mean loss on candidates never queried.
    pub test_loss: f64,
    /// Filled in once a baseline loss is known.
    pub accuracy_pct: Option<f64>,
    pub never_queried: usize,
    pub iterations: Vec<IterationLog>,
}

impl ExperimentReport {
    pub fn with_baseline(mut self, rf_loss: f64) -> Result<Self> {
        self.accuracy_pct = Some(100.0 * accuracy(self.test_loss, rf_loss)?);
        Ok(self)
    }

    pub fn fallback_iterations(&self) -> usize {
        self.iterations.iter().filter(|l| l.fallback).count()
    }
}
