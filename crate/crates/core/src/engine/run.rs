use std::collections::{BTreeSet, HashSet};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::{compute_usage, AdlConfig, EngineState, ExperimentReport, IterationLog, Method, Problem, Usage};
use crate::dataset::{Dataset, DatasetSplits};
use crate::embedding::EmbeddingNetwork;
use crate::nn::{dataset_loss, train, LossCurve, TrainConfig};
use crate::selection::{kmeans_pp, score_candidates, select_batch};
use crate::seed;
use crate::{Error, Result};

/// Initial training on the available set with early stopping on the validation set.
pub fn pretrain(
    net: &mut EmbeddingNetwork,
    dataset: &Dataset,
    splits: &DatasetSplits,
    cfg: &TrainConfig,
) -> Result<LossCurve> {
    train(net, &dataset.samples(&splits.avail), &dataset.samples(&splits.val), cfg)
}

/// Drops each queried point from `pool` with probability `delta`, one draw per
/// queried point in order.
pub fn remove_at_rate(pool: &[usize], queried: &[usize], delta: f64, rng: &mut seed::Rng) -> Vec<usize> {
    let delta = delta.clamp(0.0, 1.0);
    let removed: HashSet<usize> = queried.iter().copied().filter(|_| rng.gen_bool(delta)).collect();
    pool.iter().copied().filter(|p| !removed.contains(p)).collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Strategy {
    Adl,
    Pdl,
}

/// Uniform draw without replacement, in draw order.
fn uniform(candidates: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    index::sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|j| candidates[j])
        .collect()
}

fn select(
    strategy: Strategy,
    cfg: &AdlConfig,
    dataset: &Dataset,
    net: &EmbeddingNetwork,
    candidates: &[usize],
    k: usize,
    iteration: u64,
) -> Result<(Vec<usize>, bool)> {
    let uniform_seed = seed::derive(cfg.seed, "engine.uniform", iteration);
    if strategy == Strategy::Pdl {
        return Ok((uniform(candidates, k, uniform_seed), false));
    }
    let vectors: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|&i| {
            let p = &dataset.points[i];
            let label = cfg.oracle_mode.then_some(p.label.as_slice());
            net.encode(cfg.variable, &p.features, label)
        })
        .collect::<Result<_>>()?;
    // one clustering seed per run: fixed embeddings give fixed clusters
    match kmeans_pp(&vectors, k, seed::derive(cfg.seed, "engine.cluster", 0)) {
        Ok(assignment) => {
            let scores = score_candidates(&assignment, &vectors, vectors[0].len())?;
            let picks = select_batch(cfg.variant, &assignment, &scores, seed::derive(cfg.seed, "engine.select", iteration))?;
            Ok((picks.into_iter().map(|j| candidates[j]).collect(), false))
        }
        Err(Error::DegenerateClustering { distinct, k }) => {
            log::warn!(
                "iteration {iteration}: {distinct} distinct {} embeddings for {k} clusters; selecting uniformly",
                cfg.variable.name()
            );
            Ok((uniform(candidates, k, uniform_seed), true))
        }
        Err(e) => Err(e),
    }
}

pub(super) fn training_ids(cumulative: bool, choice: &BTreeSet<usize>, batch: &[usize]) -> Vec<usize> {
    if cumulative {
        choice.iter().copied().collect()
    } else {
        batch.to_vec()
    }
}

pub(super) fn iteration_train_config(base: &TrainConfig, seed: u64, iteration: u64) -> TrainConfig {
    TrainConfig {
        seed: seed::derive(seed, "engine.train", iteration),
        ..base.clone()
    }
}

type Observer<'o> = &'o mut dyn FnMut(&EngineState, &IterationLog) -> Result<()>;

fn run(
    strategy: Strategy,
    cfg: &AdlConfig,
    problem: &Problem<'_>,
    net: &mut EmbeddingNetwork,
    observer: Observer<'_>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    problem.train.validate()?;
    let dataset = problem.dataset;
    let pool = problem.pool();
    if cfg.n_budget > pool.len() {
        return Err(Error::config(
            "n_budget",
            format!("{} exceeds the {}-point candidate pool", cfg.n_budget, pool.len()),
        ));
    }
    let mut state = EngineState::new(&problem.splits.avail, pool);
    state.check(cfg.n_budget)?;
    let val = dataset.samples(&problem.splits.val);
    let all_candidates = dataset.samples(&state.initial_pool);
    let initial_test_loss = dataset_loss(net, &all_candidates)?;
    let mut removal_rng = seed::derived_rng(cfg.seed, "engine.removal", 0);
    let mut logs = Vec::new();

    while state.c_budget < cfg.n_budget && state.c_iter < cfg.n_iter {
        if state.pool.is_empty() {
            log::warn!("candidate pool exhausted after {} iterations", state.c_iter);
            break;
        }
        let iteration = state.c_iter as u64 + 1;
        let candidates = match cfg.pool_cap {
            Some(cap) if state.pool.len() > cap => {
                let mut rng = seed::derived_rng(cfg.seed, "engine.pool", iteration);
                let mut picks = index::sample(&mut rng, state.pool.len(), cap).into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|j| state.pool[j]).collect()
            }
            _ => state.pool.clone(),
        };
        let k = cfg.n_batch.min(cfg.n_budget - state.c_budget).min(candidates.len());
        let (queried, fallback) = select(strategy, cfg, dataset, net, &candidates, k, iteration)?;
        let fresh = queried.iter().filter(|i| !state.choice.contains(i)).count();

        state.choice.extend(queried.iter().copied());
        state.c_budget = state.choice.len();
        let curve = if cfg.freeze_model {
            None
        } else {
            let ids = training_ids(cfg.cumulative_training, &state.choice, &queried);
            let tc = iteration_train_config(problem.train, cfg.seed, iteration);
            Some(train(net, &dataset.samples(&ids), &val, &tc)?)
        };
        let pool_before = state.pool.len();
        state.pool = remove_at_rate(&state.pool, &queried, cfg.delta, &mut removal_rng);
        state.c_iter += 1;

        let unqueried = state.never_queried();
        let log = IterationLog {
            iteration: state.c_iter,
            fresh,
            repeats: queried.len() - fresh,
            queried,
            fallback,
            pool_before,
            pool_after: state.pool.len(),
            c_budget: state.c_budget,
            curve,
            val_loss_unqueried: if unqueried.is_empty() {
                None
            } else {
                Some(dataset_loss(net, &dataset.samples(&unqueried))?)
            },
            val_loss_all_candidates: dataset_loss(net, &all_candidates)?,
        };
        state.check(cfg.n_budget)?;
        observer(&state, &log)?;
        logs.push(log);
    }

    let never = state.never_queried();
    if never.is_empty() {
        return Err(Error::invalid("every candidate was queried; no data left for the test loss"));
    }
    let test_loss = dataset_loss(net, &dataset.samples(&never))?;
    let usage = if cfg.n_budget == 0 {
        Usage {
            data_pct: 0.0,
            sensors_pct: 0.0,
        }
    } else {
        compute_usage(dataset, &state.choice, &state.avail, &state.initial_pool, cfg.n_budget)?
    };
    Ok(ExperimentReport {
        prediction_type: problem.prediction_type,
        method: match strategy {
            Strategy::Adl => Method::Adl {
                variable: cfg.variable,
                variant: cfg.variant,
            },
            Strategy::Pdl => Method::Pdl,
        },
        delta: cfg.delta,
        seed: cfg.seed,
        n_budget: cfg.n_budget,
        data_pct: usage.data_pct,
        sensors_pct: usage.sensors_pct,
        initial_test_loss,
        test_loss,
        accuracy_pct: None,
        never_queried: never.len(),
        iterations: logs,
    })
}

/// Active selection: cluster the encoded pool and pick one point per cluster.
pub fn run_adl(cfg: &AdlConfig, problem: &Problem<'_>, net: &mut EmbeddingNetwork) -> Result<ExperimentReport> {
    run(Strategy::Adl, cfg, problem, net, &mut |_, _| Ok(()))
}

/// As [`run_adl`], calling `observer` after every iteration.
pub fn run_adl_observed(
    cfg: &AdlConfig,
    problem: &Problem<'_>,
    net: &mut EmbeddingNetwork,
    observer: Observer<'_>,
) -> Result<ExperimentReport> {
    run(Strategy::Adl, cfg, problem, net, observer)
}

/// Passive baseline: batches drawn uniformly from the pool.
pub fn run_pdl(cfg: &AdlConfig, problem: &Problem<'_>, net: &mut EmbeddingNetwork) -> Result<ExperimentReport> {
    run(Strategy::Pdl, cfg, problem, net, &mut |_, _| Ok(()))
}

pub fn run_pdl_observed(
    cfg: &AdlConfig,
    problem: &Problem<'_>,
    net: &mut EmbeddingNetwork,
    observer: Observer<'_>,
) -> Result<ExperimentReport> {
    run(Strategy::Pdl, cfg, problem, net, observer)
}
