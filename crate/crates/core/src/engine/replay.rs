use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::run::{iteration_train_config, training_ids};
use super::{AdlConfig, IterationLog, Problem};
use crate::embedding::EmbeddingNetwork;
use crate::nn::{dataset_loss, train, LossCurve};
use crate::seed;
use crate::{Error, Result};

/// Inputs shared by both replay orderings.
#[derive(Clone, Copy)]
pub struct ReplaySetup<'a> {
    pub problem: Problem<'a>,
    pub cfg: &'a AdlConfig,
    /// State the original run started from.
    pub initial_net: &'a EmbeddingNetwork,
    /// Points the per-iteration loss is measured on.
    pub eval_ids: &'a [usize],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayTrace {
    pub batches: Vec<Vec<usize>>,
    pub curves: Vec<Option<LossCurve>>,
    /// Loss on the evaluation set after each iteration.
    pub val_losses: Vec<f64>,
}

impl ReplayTrace {
    /// Trapezoidal area under the per-iteration loss curve.
    pub fn area(&self) -> f64 {
        self.val_losses.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.val_losses.last().copied()
    }
}

/// All queried points, shuffled and cut back into the original batch sizes.
pub fn shuffled_batches(logs: &[IterationLog], rng: &mut seed::Rng) -> Vec<Vec<usize>> {
    let mut all: Vec<usize> = logs.iter().flat_map(|l| l.queried.iter().copied()).collect();
    all.shuffle(rng);
    let mut rest = all.as_slice();
    logs.iter()
        .map(|l| {
            let (head, tail) = rest.split_at(l.queried.len());
            rest = tail;
            head.to_vec()
        })
        .collect()
}

/// Retrains a copy of the initial network on the queried batches, in the
/// original order or reshuffled with `seed`. Per-iteration training seeds
/// follow the original run, so the original order reproduces it exactly.
pub fn replay_sequence(
    logs: &[IterationLog],
    randomize: bool,
    seed: u64,
    setup: &ReplaySetup<'_>,
) -> Result<ReplayTrace> {
    if logs.is_empty() {
        return Err(Error::invalid("replay needs at least one logged iteration"));
    }
    if setup.eval_ids.is_empty() {
        return Err(Error::invalid("replay evaluation set is empty"));
    }
    let batches = if randomize {
        shuffled_batches(logs, &mut seed::derived_rng(seed, "replay.shuffle", 0))
    } else {
        logs.iter().map(|l| l.queried.clone()).collect()
    };
    let dataset = setup.problem.dataset;
    let val = dataset.samples(&setup.problem.splits.val);
    let eval = dataset.samples(setup.eval_ids);
    let mut net = setup.initial_net.clone();
    let mut seen = BTreeSet::new();
    let mut curves = Vec::with_capacity(batches.len());
    let mut val_losses = Vec::with_capacity(batches.len());
    for (i, batch) in batches.iter().enumerate() {
        seen.extend(batch.iter().copied());
        let curve = if setup.cfg.freeze_model {
            None
        } else {
            let ids = training_ids(setup.cfg.cumulative_training, &seen, batch);
            let tc = iteration_train_config(setup.problem.train, setup.cfg.seed, i as u64 + 1);
            Some(train(&mut net, &dataset.samples(&ids), &val, &tc)?)
        };
        curves.push(curve);
        val_losses.push(dataset_loss(&net, &eval)?);
    }
    Ok(ReplayTrace {
        batches,
        curves,
        val_losses,
    })
}
