//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are always printed. Pass
//! criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 5 9`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use adl_core::dataset::{generate_synthetic, split, Dataset, DatasetSplits, Normalizer, PredictionType, SyntheticConfig};
use adl_core::embedding::{EmbeddingNetConfig, EmbeddingNetwork, EncoderId};
use adl_core::engine::{
    accuracy, percent, pretrain, replay_sequence, run_adl, run_adl_observed, run_pdl, run_pdl_observed, AdlConfig,
    EngineState, ExperimentReport, IterationLog, Problem, ReplaySetup,
};
use adl_core::nn::{dataset_loss, gradients, Activation, LayerSpec, Sample, Sequential, TrainConfig, Trainable};
use adl_core::selection::{kmeans_pp, laplacian_similarity, QueryVariant};
use adl_core::{seed, Result};

// Tolerances and thresholds.
const LAPLACIAN_TOL: f64 = 1e-12;
const GRADIENT_REL_TOL: f64 = 1e-4;
const GRADIENT_ABS_FLOOR: f64 = 1e-7;
const FD_STEP: f64 = 1e-5;
const SSE_SLACK: f64 = 0.05;
const SSE_MONOTONE_EPS: f64 = 1e-12;
const BLOB_SPREAD: f64 = 1.0;
const OCCUPANCY_TOL_POINTS: f64 = 3.0;
const REPLAY_FINAL_REL_TOL: f64 = 0.10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Dataset, splits and a network pretrained on the available set.
struct Bench {
    dataset: Dataset,
    splits: DatasetSplits,
    net: EmbeddingNetwork,
    train: TrainConfig,
}

#[derive(Clone)]
struct Scale {
    buildings: usize,
    timestamps: usize,
    shift: f64,
    hidden: usize,
    embedding: usize,
    filters: usize,
    train: TrainConfig,
}

impl Scale {
    fn tiny(buildings: usize, timestamps: usize) -> Self {
        Scale {
            buildings,
            timestamps,
            shift: 1.0,
            hidden: 8,
            embedding: 4,
            filters: 2,
            train: TrainConfig {
                max_epochs: 2,
                patience: 1,
                learning_rate: 0.01,
                ..TrainConfig::default()
            },
        }
    }

    /// Used for the directional experiments.
    fn study() -> Self {
        Scale {
            buildings: 20,
            timestamps: 100,
            shift: 1.0,
            hidden: 32,
            embedding: 8,
            filters: 4,
            train: TrainConfig {
                max_epochs: 30,
                patience: 3,
                learning_rate: 0.002,
                ..TrainConfig::default()
            },
        }
    }

    fn bench(&self, seed: u64) -> Result<Bench> {
        let raw = generate_synthetic(&SyntheticConfig {
            n_buildings: self.buildings,
            n_timestamps: self.timestamps,
            shift_strength: self.shift,
            seed,
            ..SyntheticConfig::default()
        })?;
        let splits = split(&raw, seed)?;
        let dataset = Normalizer::fit(&raw, &splits.avail)?.apply(&raw);
        let net_cfg = EmbeddingNetConfig {
            hidden_width: self.hidden,
            embedding_dim: self.embedding,
            conv_filters: self.filters,
            ..EmbeddingNetConfig::for_schema(&dataset.schema)
        };
        let mut net = EmbeddingNetwork::build(net_cfg, seed::derive(seed, "acceptance.init", 0))?;
        let pre = TrainConfig {
            seed: seed::derive(seed, "acceptance.pretrain", 0),
            ..self.train.clone()
        };
        pretrain(&mut net, &dataset, &splits, &pre)?;
        Ok(Bench {
            dataset,
            splits,
            net,
            train: self.train.clone(),
        })
    }
}

impl Bench {
    fn problem(&self, kind: PredictionType) -> Problem<'_> {
        Problem {
            dataset: &self.dataset,
            splits: &self.splits,
            prediction_type: kind,
            train: &self.train,
        }
    }

    fn config(&self, kind: PredictionType, delta: f64, variant: QueryVariant, variable: EncoderId, seed: u64) -> AdlConfig {
        AdlConfig::for_pool(self.splits.partition(kind).len(), delta, variant, variable, seed)
    }

    fn adl(&self, cfg: &AdlConfig, kind: PredictionType) -> Result<ExperimentReport> {
        run_adl(cfg, &self.problem(kind), &mut self.net.clone())
    }

    fn pdl(&self, cfg: &AdlConfig, kind: PredictionType) -> Result<ExperimentReport> {
        run_pdl(cfg, &self.problem(kind), &mut self.net.clone())
    }
}

const SCORED_VARIANTS: [QueryVariant; 4] = QueryVariant::ALL;

fn c1_formulas() -> Verdict {
    let a = percent(100.0 * accuracy(0.235506, 0.383450).unwrap());
    let b = percent(100.0 * accuracy(0.031373, 0.383450).unwrap());
    let mut rng = seed::rng(1);
    let mut worst: f64 = 0.0;
    for n_e in 1..=16 {
        let v: Vec<f64> = (0..n_e).map(|_| rng.gen_range(-5.0..5.0)).collect();
        worst = worst.max((laplacian_similarity(&v, &v, n_e).unwrap() - 1.0).abs());
        // Shift every coordinate by +-1 so the L1 distance is exactly n_e.
        let w: Vec<f64> = v.iter().map(|x| if rng.gen() { x + 1.0 } else { x - 1.0 }).collect();
        let l1: f64 = v.iter().zip(&w).map(|(p, q)| (p - q).abs()).sum();
        let expected = (-l1 / n_e as f64).exp();
        worst = worst.max((laplacian_similarity(&w, &v, n_e).unwrap() - expected).abs());
        worst = worst.max((expected - (-1.0f64).exp()).abs());
    }
    verdict(
        a == 39 && b == 92 && worst <= LAPLACIAN_TOL,
        format!("accuracy {a}% and {b}%, worst kernel identity error {worst:.1e}"),
    )
}

/// Central differences of the mean loss, one parameter at a time.
fn numeric_gradient(net: &Sequential, batch: &[Sample<'_>]) -> Vec<f64> {
    let base = net.parameters().to_flat();
    let mut probe = net.clone();
    let mut loss_at = |flat: &[f64]| {
        probe.parameters_mut().copy_from_flat(flat);
        dataset_loss(&probe, batch).unwrap()
    };
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + FD_STEP;
            let up = loss_at(&p);
            p[i] = base[i] - FD_STEP;
            let down = loss_at(&p);
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn random_network(rng: &mut seed::Rng, seed: u64) -> Sequential {
    loop {
        let steps = rng.gen_range(3..=8);
        let channels = rng.gen_range(1..=3);
        let kernel = rng.gen_range(1..=3.min(steps));
        let filters = rng.gen_range(1..=3);
        let conv = LayerSpec::conv1d(steps, channels, filters, kernel, Activation::Relu);
        let hidden = rng.gen_range(2..=10);
        let mut specs = vec![conv.clone(), LayerSpec::dense(conv.output_len(), hidden, Activation::Relu)];
        if rng.gen() {
            specs.push(LayerSpec::dense(hidden, hidden, Activation::Relu));
        }
        specs.push(LayerSpec::dense(hidden, rng.gen_range(1..=4), Activation::Linear));
        if specs.iter().map(LayerSpec::param_count).sum::<usize>() <= 1000 {
            let mut net = Sequential::new(specs, seed).unwrap();
            // Nonzero biases keep ReLU pre-activations away from the kink.
            for layer in &mut net.params_mut().layers {
                for b in &mut layer.bias {
                    *b = rng.gen_range(-0.3..0.3);
                }
            }
            return net;
        }
    }
}

fn c2_gradients() -> Verdict {
    let mut rng = seed::rng(2);
    let mut failures = 0;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let net = random_network(&mut rng, 100 + i);
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..net.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..net.output_len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let batch: Vec<Sample<'_>> = xs.iter().zip(&ys).map(|(x, y)| Sample::new(x, y)).collect();
        let (_, analytic) = gradients(&net, &batch).unwrap();
        let numeric = numeric_gradient(&net, &batch);
        for (a, n) in analytic.to_flat().iter().zip(&numeric) {
            checked += 1;
            let scale = a.abs().max(n.abs());
            if scale < GRADIENT_ABS_FLOOR {
                continue;
            }
            let rel = (a - n).abs() / scale;
            worst = worst.max(rel);
            if rel > GRADIENT_REL_TOL {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0,
        format!("{checked} parameters over 20 networks, {failures} outside tolerance, worst relative error {worst:.1e}"),
    )
}

fn sse(points: &[Vec<f64>], labels: &[usize], k: usize) -> Option<f64> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    if counts.contains(&0) {
        return None;
    }
    Some(
        points
            .iter()
            .zip(labels)
            .map(|(p, &c)| {
                p.iter()
                    .zip(&sums[c])
                    .map(|(x, s)| (x - s / counts[c] as f64).powi(2))
                    .sum::<f64>()
            })
            .sum(),
    )
}

/// Optimal SSE over every labelling into `k` nonempty clusters.
fn brute_force_sse(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        if let Some(s) = sse(points, &labels, k) {
            best = best.min(s);
        }
        // Odometer increment; the first point stays in cluster 0 by symmetry.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i -= 1;
        }
    }
}

/// Points drawn around `k` random centers, or uniformly when `clustered` is false.
fn clustering_instance(rng: &mut seed::Rng, clustered: bool) -> (Vec<Vec<f64>>, usize) {
    let n = rng.gen_range(5..=12);
    let k = rng.gen_range(2..=3);
    let centers: Vec<[f64; 2]> = (0..k).map(|_| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]).collect();
    let points = (0..n)
        .map(|i| {
            if clustered {
                let c = centers[i % k];
                let spread = Normal::new(0.0, BLOB_SPREAD).unwrap();
                vec![c[0] + spread.sample(rng), c[1] + spread.sample(rng)]
            } else {
                vec![rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]
            }
        })
        .collect();
    (points, k)
}

/// Instances within the SSE slack of the optimum, and instances with a monotone Lloyd trace.
fn clustering_hits(clustered: bool, stream: u64) -> (usize, usize) {
    let mut rng = seed::rng(stream);
    let instances: Vec<_> = (0..50).map(|_| clustering_instance(&mut rng, clustered)).collect();
    let results: Vec<(bool, bool)> = instances
        .par_iter()
        .enumerate()
        .map(|(i, (points, k))| {
            let fit = kmeans_pp(points, *k, 1000 + i as u64).unwrap();
            let optimal = brute_force_sse(points, *k);
            let near = fit.within_cluster_sse <= (1.0 + SSE_SLACK) * optimal;
            let monotone = fit
                .sse_history
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + SSE_MONOTONE_EPS));
            (near, monotone)
        })
        .collect();
    (results.iter().filter(|r| r.0).count(), results.iter().filter(|r| r.1).count())
}

fn c3_clustering() -> Verdict {
    let (near, monotone) = clustering_hits(true, 3);
    // Structureless noise has many poor Lloyd fixed points; reported, not gated.
    let (noise_near, noise_monotone) = clustering_hits(false, 33);
    verdict(
        near >= 45 && monotone == 50 && noise_monotone == 50,
        format!(
            "clustered instances: within 5% of optimum in {near}/50, monotone in {monotone}/50; \
             uniform noise: within 5% in {noise_near}/50, monotone in {noise_monotone}/50"
        ),
    )
}

#[derive(Default)]
struct InvariantTally {
    runs: usize,
    steps: usize,
    overlaps: usize,
    over_budget: usize,
    full_rows: usize,
    delta_one_rows: usize,
    repeats: usize,
}

fn c4_engine_invariants() -> Verdict {
    let scale = Scale::tiny(40, 200);
    let cells: Vec<(u64, PredictionType, f64)> = [0u64, 1]
        .iter()
        .flat_map(|&s| {
            PredictionType::CANDIDATES
                .iter()
                .flat_map(move |&k| [0.0, 0.5, 1.0].map(move |d| (s, k, d)))
        })
        .collect();
    let methods: [Option<(EncoderId, QueryVariant)>; 5] = [
        None,
        Some((EncoderId::PredictedLabel, QueryVariant::Max)),
        Some((EncoderId::Joint, QueryVariant::Avg)),
        Some((EncoderId::SpaceTime, QueryVariant::Min)),
        Some((EncoderId::Time, QueryVariant::Rnd)),
    ];
    let benches: Vec<Bench> = [0u64, 1].par_iter().map(|&s| scale.bench(s).unwrap()).collect();
    let tallies: Vec<InvariantTally> = cells
        .par_iter()
        .flat_map(|&(s, kind, delta)| methods.par_iter().map(move |m| (s, kind, delta, *m)))
        .map(|(s, kind, delta, method)| {
            let bench = &benches[s as usize];
            let (variable, variant) = method.unwrap_or((EncoderId::PredictedLabel, QueryVariant::Rnd));
            let cfg = bench.config(kind, delta, variant, variable, 40 + s);
            let avail: HashSet<usize> = bench.splits.avail.iter().copied().collect();
            let mut tally = InvariantTally {
                runs: 1,
                ..InvariantTally::default()
            };
            let mut queried_before = HashSet::new();
            let mut observe = |state: &EngineState, log: &IterationLog| -> Result<()> {
                tally.steps += 1;
                tally.overlaps += state.pool.iter().filter(|i| avail.contains(i)).count();
                tally.over_budget += usize::from(state.c_budget > cfg.n_budget);
                if delta == 1.0 {
                    tally.repeats += log.queried.iter().filter(|i| !queried_before.insert(**i)).count();
                }
                Ok(())
            };
            let problem = bench.problem(kind);
            let mut net = bench.net.clone();
            let report = match method {
                None => run_pdl_observed(&cfg, &problem, &mut net, &mut observe),
                Some(_) => run_adl_observed(&cfg, &problem, &mut net, &mut observe),
            }
            .unwrap();
            if delta == 1.0 {
                tally.delta_one_rows = 1;
                tally.full_rows = usize::from(percent(report.data_pct) == 100);
            }
            tally
        })
        .collect();
    let t = tallies.iter().fold(InvariantTally::default(), |a, b| InvariantTally {
        runs: a.runs + b.runs,
        steps: a.steps + b.steps,
        overlaps: a.overlaps + b.overlaps,
        over_budget: a.over_budget + b.over_budget,
        full_rows: a.full_rows + b.full_rows,
        delta_one_rows: a.delta_one_rows + b.delta_one_rows,
        repeats: a.repeats + b.repeats,
    });
    verdict(
        t.overlaps == 0 && t.over_budget == 0 && t.full_rows == t.delta_one_rows && t.repeats == 0,
        format!(
            "{} runs, {} steps: {} avail/pool overlaps, {} budget overruns, {}/{} delta=1 rows at 100% data, {} delta=1 re-queries",
            t.runs, t.steps, t.overlaps, t.over_budget, t.full_rows, t.delta_one_rows, t.repeats
        ),
    )
}

fn c5_occupancy() -> Verdict {
    let scale = Scale::tiny(40, 200);
    let usages: Vec<(f64, usize, usize)> = (0..20u64)
        .into_par_iter()
        .map(|s| {
            let bench = scale.bench(500 + s).unwrap();
            let kind = PredictionType::Temporal;
            let cfg = AdlConfig {
                freeze_model: true,
                ..bench.config(kind, 0.0, QueryVariant::Rnd, EncoderId::PredictedLabel, s)
            };
            let report = bench.pdl(&cfg, kind).unwrap();
            (report.data_pct, bench.splits.partition(kind).len(), cfg.n_batch)
        })
        .collect();
    let mean = usages.iter().map(|u| u.0).sum::<f64>() / usages.len() as f64;
    // Unique points per budget after drawing half the pool with replacement.
    let target = 100.0 * (1.0 - (-0.5f64).exp()) / 0.5;
    // Expected usage when each batch is drawn without replacement.
    let batched = usages
        .iter()
        .map(|&(_, pool, batch)| {
            let budget = (batch * 10) as f64;
            100.0 * pool as f64 * (1.0 - (1.0 - batch as f64 / pool as f64).powi(10)) / budget
        })
        .sum::<f64>()
        / usages.len() as f64;
    verdict(
        (mean - target).abs() <= OCCUPANCY_TOL_POINTS,
        format!("mean unique usage {mean:.2}% vs {target:.2}% (batched expectation {batched:.2}%) over 20 seeds"),
    )
}

/// Per-seed losses for every scored variant and for PDL on one pool.
struct Comparison {
    adl: Vec<ExperimentReport>,
    pdl: ExperimentReport,
}

fn compare(bench: &Bench, kind: PredictionType, delta: f64, seed: u64) -> Comparison {
    let adl = SCORED_VARIANTS
        .par_iter()
        .map(|&v| bench.adl(&bench.config(kind, delta, v, EncoderId::PredictedLabel, seed), kind).unwrap())
        .collect();
    let pdl = bench
        .pdl(&bench.config(kind, delta, QueryVariant::Rnd, EncoderId::PredictedLabel, seed), kind)
        .unwrap();
    Comparison { adl, pdl }
}

fn c6_delta_one() -> Verdict {
    let scale = Scale::study();
    let kind = PredictionType::SpatioTemporal;
    let wins: Vec<(bool, f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let bench = scale.bench(600 + s).unwrap();
            let c = compare(&bench, kind, 1.0, s);
            let best = c.adl.iter().map(|r| r.test_loss).fold(f64::INFINITY, f64::min);
            (best < c.pdl.test_loss, best, c.pdl.test_loss)
        })
        .collect();
    let n = wins.iter().filter(|w| w.0).count();
    let ratio = wins.iter().map(|w| w.1 / w.2).sum::<f64>() / wins.len() as f64;
    verdict(
        n >= 8,
        format!("best ADL variant beats PDL in {n}/10 seeds, mean loss ratio {ratio:.3}"),
    )
}

fn c7_delta_zero() -> Verdict {
    let scale = Scale::study();
    let kind = PredictionType::SpatioTemporal;
    let wins: Vec<bool> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let bench = scale.bench(700 + s).unwrap();
            let c = compare(&bench, kind, 0.0, s);
            c.adl
                .iter()
                .any(|r| r.test_loss <= c.pdl.test_loss && r.data_pct < c.pdl.data_pct)
        })
        .collect();
    let n = wins.iter().filter(|w| **w).count();
    verdict(
        n >= 7,
        format!("some ADL variant matches PDL loss with less data in {n}/10 seeds"),
    )
}

/// Area and final loss of the original and shuffled replays of one ADL run.
fn replay_pair(bench: &Bench, delta: f64, seed: u64) -> ((f64, f64), (f64, f64)) {
    let kind = PredictionType::SpatioTemporal;
    let cfg = bench.config(kind, delta, QueryVariant::Max, EncoderId::PredictedLabel, seed);
    let problem = bench.problem(kind);
    let mut never = Vec::new();
    let mut net = bench.net.clone();
    let report = run_adl_observed(&cfg, &problem, &mut net, &mut |state: &EngineState, _: &IterationLog| {
        never = state.never_queried();
        Ok(())
    })
    .unwrap();
    let setup = ReplaySetup {
        problem,
        cfg: &cfg,
        initial_net: &bench.net,
        eval_ids: &never,
    };
    let original = replay_sequence(&report.iterations, false, seed, &setup).unwrap();
    let shuffled = replay_sequence(&report.iterations, true, seed, &setup).unwrap();
    (
        (original.area(), original.final_loss().unwrap()),
        (shuffled.area(), shuffled.final_loss().unwrap()),
    )
}

fn c8_sequence() -> Verdict {
    let scale = Scale::study();
    let results: Vec<(bool, bool)> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let bench = scale.bench(800 + s).unwrap();
            let ((area_o, _), (area_s, _)) = replay_pair(&bench, 1.0, s);
            let (( _, final_o), (_, final_s)) = replay_pair(&bench, 0.0, s);
            let rel = (final_o - final_s).abs() / final_o.max(final_s);
            (area_o <= area_s, rel < REPLAY_FINAL_REL_TOL)
        })
        .collect();
    let faster = results.iter().filter(|r| r.0).count();
    let invariant = results.iter().filter(|r| r.1).count();
    verdict(
        faster >= 7 && invariant > 5,
        format!("delta=1 original area <= shuffled in {faster}/10; delta=0 finals within 10% in {invariant}/10"),
    )
}

fn c9_time_degeneracy() -> Verdict {
    // Few time stamps, so the time encoder has at most that many distinct outputs.
    let scale = Scale {
        train: TrainConfig {
            max_epochs: 10,
            patience: 3,
            learning_rate: 0.005,
            ..TrainConfig::default()
        },
        ..Scale::tiny(60, 12)
    };
    let kind = PredictionType::Spatial;
    let runs: Vec<(usize, usize, usize, f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let bench = scale.bench(900 + s).unwrap();
            let cfg = bench.config(kind, 1.0, QueryVariant::Max, EncoderId::Time, s);
            let times: HashSet<_> = bench.splits.partition(kind).iter().map(|&i| bench.dataset.points[i].time).collect();
            let adl = bench.adl(&cfg, kind).unwrap();
            let pdl = bench.pdl(&cfg, kind).unwrap();
            (times.len(), cfg.n_batch, adl.fallback_iterations(), adl.test_loss, pdl.test_loss)
        })
        .collect();
    let degenerate = runs.iter().all(|r| r.0 <= r.1);
    let fell_back = runs.iter().all(|r| r.2 == 10);
    let range = |f: fn(&(usize, usize, usize, f64, f64)) -> f64| {
        let v: Vec<f64> = runs.iter().map(f).collect();
        (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let (adl_lo, adl_hi) = range(|r| r.3);
    let (pdl_lo, pdl_hi) = range(|r| r.4);
    let overlap = adl_lo <= pdl_hi && pdl_lo <= adl_hi;
    verdict(
        degenerate && fell_back && overlap,
        format!(
            "pools degenerate: {degenerate}, all iterations fell back: {fell_back}, loss ranges ADL [{adl_lo:.4}, {adl_hi:.4}] PDL [{pdl_lo:.4}, {pdl_hi:.4}]"
        ),
    )
}

fn cli(args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_adl")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

/// Relative path and contents of every file below `root`, sorted.
fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("det.conf");
    let data = tmp.path().join("data.bin");
    fs::write(
        &conf,
        format!(
            "seed = 11\ndataset = {}\nn_buildings = 16\nn_timestamps = 40\nhidden_width = 8\nembedding_dim = 3\n\
             conv_filters = 2\nmax_epochs = 2\npatience = 1\nlearning_rate = 0.01\nrf_trees = 5\n\
             prediction_types = temporal, spatial\ndeltas = 0, 1\nvariants = rnd, avg\n",
            data.display()
        ),
    )
    .unwrap();
    let conf = conf.to_str().unwrap();
    let run_all = |root: &Path| -> std::result::Result<(), String> {
        let p = |name: &str| root.join(name).to_str().unwrap().to_owned();
        fs::create_dir_all(root).map_err(|e| e.to_string())?;
        cli(&["generate", "--config", conf, "--out", &p("data.bin")])?;
        cli(&["run", "--config", conf, "--out", &p("run")])?;
        cli(&["grid", "--config", conf, "--out", &p("grid")])?;
        cli(&["replay", "--config", conf, "--artifacts", &p("run"), "--out", &p("replay")])
    };
    cli(&["generate", "--config", conf, "--out", data.to_str().unwrap()]).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    if let Err(e) = run_all(&a).and_then(|_| run_all(&b)) {
        return verdict(false, format!("command failed: {}", e.trim()));
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    let differing: Vec<&str> = sa
        .iter()
        .zip(&sb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    verdict(
        sa.len() == sb.len() && differing.is_empty() && sa.len() >= 8,
        format!("{} files from generate, run, grid and replay; {} differ", sa.len(), differing.len()),
    )
}

type Criterion = (usize, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "accuracy and kernel formulas", c1_formulas),
    (2, "backprop vs finite differences", c2_gradients),
    (3, "k-means++ vs brute force", c3_clustering),
    (4, "engine invariants", c4_engine_invariants),
    (5, "passive occupancy at delta=0", c5_occupancy),
    (6, "active beats passive at delta=1", c6_delta_one),
    (7, "less data at delta=0", c7_delta_zero),
    (8, "query order effect", c8_sequence),
    (9, "time-variable degeneracy", c9_time_degeneracy),
    (10, "byte-identical reruns", c10_determinism),
];

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}  {name}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
