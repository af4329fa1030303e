//! Command implementations behind the `adl` binary.
//!
//! Every command is a deterministic function of its configuration file and
//! seed. All sub-seeds derive from the run seed.

mod config;
mod report;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    generate_synthetic, load_dataset, load_splits, save_dataset, save_splits, split, Dataset, DatasetSplits,
    Normalizer, PredictionType,
};
use crate::embedding::{load_weights, save_weights, EmbeddingNetConfig, EmbeddingNetwork, EncoderId};
use crate::engine::{
    pretrain, replay_sequence, run_adl_observed, run_pdl_observed, AdlConfig, EngineState, ExperimentReport,
    IterationLog, Problem, ReplaySetup, ReplayTrace,
};
use crate::forest::{rf_baseline, ForestConfig};
use crate::nn::{LossCurve, TrainConfig};
use crate::selection::QueryVariant;
use crate::seed;
use crate::{Error, Result};

pub use config::{HarnessConfig, MethodKind, RawConfig};
pub use report::{
    read_report, write_curve, write_report, CurveRow, GridCell, ReportRow, CURVE_HEADER, REPORT_HEADER,
};

pub const REPORT_FILE: &str = "report.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const ITERATIONS_FILE: &str = "iterations.jsonl";
pub const RUN_FILE: &str = "run.json";
pub const WEIGHTS_FILE: &str = "initial.weights";
pub const SPLITS_FILE: &str = "splits.bin";
pub const GRID_FILE: &str = "grid.csv";
pub const REPLAY_FILE: &str = "replay.csv";

/// Dataset shape printed by `generate`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerateSummary {
    pub points: usize,
    pub buildings: usize,
    pub timestamps: usize,
    pub d_x: usize,
    pub d_y: usize,
}

pub fn cmd_generate(cfg: &HarnessConfig, out: &Path) -> Result<GenerateSummary> {
    let synth = cfg.synthetic()?;
    let dataset = generate_synthetic(&synth)?;
    save_dataset(&dataset, out).map_err(|e| e.at_path(out))?;
    Ok(GenerateSummary {
        points: dataset.len(),
        buildings: synth.n_buildings,
        timestamps: synth.n_timestamps,
        d_x: dataset.schema.d_x(),
        d_y: dataset.schema.d_y,
    })
}

fn derived(cfg: &HarnessConfig, stream: &str) -> u64 {
    seed::derive(cfg.seed, stream, 0)
}

fn load_and_split(cfg: &HarnessConfig, splits: Option<DatasetSplits>) -> Result<(Dataset, DatasetSplits)> {
    let path = cfg.dataset_path()?;
    let raw = load_dataset(&path).map_err(|e| e.at_path(&path))?;
    let splits = match splits {
        Some(s) => s,
        None => split(&raw, derived(cfg, "harness.split"))?,
    };
    splits.check(&raw)?;
    let dataset = Normalizer::fit(&raw, &splits.avail)?.apply(&raw);
    Ok((dataset, splits))
}

fn pretrained(cfg: &HarnessConfig, dataset: &Dataset, splits: &DatasetSplits) -> Result<(EmbeddingNetwork, LossCurve)> {
    let net_cfg = EmbeddingNetConfig {
        hidden_width: cfg.hidden_width,
        embedding_dim: cfg.embedding_dim,
        conv_filters: cfg.conv_filters,
        conv_kernel: cfg.conv_kernel,
        ..EmbeddingNetConfig::for_schema(&dataset.schema)
    };
    let mut net = EmbeddingNetwork::build(net_cfg, derived(cfg, "harness.init"))?;
    let train = TrainConfig {
        seed: derived(cfg, "harness.pretrain"),
        ..cfg.train.clone()
    };
    let curve = pretrain(&mut net, dataset, splits, &train)?;
    Ok((net, curve))
}

/// Budget as a fraction of the pool, rounded down to a multiple of `n_iter`
/// unless set explicitly.
pub fn adl_config(
    cfg: &HarnessConfig,
    pool_len: usize,
    delta: f64,
    variant: QueryVariant,
    variable: EncoderId,
) -> Result<AdlConfig> {
    let n_budget = cfg.n_budget.unwrap_or_else(|| {
        let b = (pool_len as f64 * cfg.budget_fraction).floor() as usize;
        b - b % cfg.n_iter
    });
    let adl = AdlConfig {
        n_budget,
        n_iter: cfg.n_iter,
        n_batch: cfg.n_batch.unwrap_or(n_budget / cfg.n_iter),
        delta,
        variant,
        variable,
        seed: derived(cfg, "harness.engine"),
        pool_cap: cfg.pool_cap,
        cumulative_training: cfg.cumulative_training,
        freeze_model: cfg.freeze_model,
        oracle_mode: cfg.oracle_mode,
    };
    adl.validate()?;
    if n_budget > pool_len {
        return Err(Error::config(
            "n_budget",
            format!("{n_budget} exceeds the {pool_len}-point candidate pool"),
        ));
    }
    Ok(adl)
}

fn forest_config(cfg: &HarnessConfig) -> ForestConfig {
    ForestConfig {
        seed: derived(cfg, "harness.forest"),
        ..cfg.forest.clone()
    }
}

/// Artifacts of a single run, enough to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub adl: AdlConfig,
    pub train: TrainConfig,
    pub report: ExperimentReport,
    pub rf_loss: Option<f64>,
    pub never_queried: Vec<usize>,
}

fn run_cell(
    method: MethodKind,
    adl: &AdlConfig,
    problem: &Problem<'_>,
    initial: &EmbeddingNetwork,
    mut on_iteration: impl FnMut(&IterationLog) -> Result<()>,
) -> Result<(ExperimentReport, Vec<usize>)> {
    let mut net = initial.clone();
    let mut never = problem.pool().to_vec();
    let mut observer = |state: &EngineState, log: &IterationLog| {
        never = state.never_queried();
        on_iteration(log)
    };
    let report = match method {
        MethodKind::Adl => run_adl_observed(adl, problem, &mut net, &mut observer)?,
        MethodKind::Pdl => run_pdl_observed(adl, problem, &mut net, &mut observer)?,
    };
    Ok((report, never))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// One experiment cell end to end; writes report, curve and replay artifacts to `out`.
pub fn cmd_run(cfg: &HarnessConfig, out: &Path) -> Result<RunRecord> {
    let (dataset, splits) = load_and_split(cfg, None)?;
    let kind = cfg.prediction_type;
    let adl = adl_config(cfg, splits.partition(kind).len(), cfg.delta, cfg.variant, cfg.variable)?;
    fs::create_dir_all(out)?;
    let (initial, _) = pretrained(cfg, &dataset, &splits)?;
    save_weights(&initial, &out.join(WEIGHTS_FILE))?;
    save_splits(&splits, &out.join(SPLITS_FILE))?;

    let rf_loss = rf_baseline(&dataset, &splits, &forest_config(cfg))?.loss(&dataset.samples(splits.partition(kind)))?;
    let problem = Problem {
        dataset: &dataset,
        splits: &splits,
        prediction_type: kind,
        train: &cfg.train,
    };
    let mut lines = create(&out.join(ITERATIONS_FILE))?;
    let (report, never) = run_cell(cfg.method, &adl, &problem, &initial, |log| {
        serde_json::to_writer(&mut lines, log)?;
        lines.write_all(b"\n")?;
        Ok(())
    })?;
    lines.flush()?;

    let cell = GridCell::from_report(&report, cfg.seed);
    let row = ReportRow::from_outcome(&cell, Ok(&report), Some(rf_loss));
    write_report(&out.join(REPORT_FILE), &[row])?;
    write_curve(&out.join(CURVE_FILE), &report.iterations)?;
    let record = RunRecord {
        seed: cfg.seed,
        adl,
        train: cfg.train.clone(),
        report,
        rf_loss: Some(rf_loss),
        never_queried: never,
    };
    let mut w = create(&out.join(RUN_FILE))?;
    serde_json::to_writer_pretty(&mut w, &record)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(record)
}

/// Cells of the grid in table order: per prediction type and delta, the RF
/// and PDL rows followed by every (variable, variant) pair.
pub fn grid_cells(cfg: &HarnessConfig) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for &kind in &cfg.prediction_types {
        for &delta in &cfg.deltas {
            let cell = |method: &str, variant: Option<QueryVariant>| GridCell {
                prediction_type: kind,
                method: method.to_string(),
                variable: None,
                variant,
                delta,
                seed: cfg.seed,
            };
            cells.push(cell("rf", None));
            cells.push(cell("pdl", None));
            for &variable in &cfg.grid_variables() {
                for &variant in &cfg.variants {
                    cells.push(GridCell {
                        variable: Some(variable),
                        ..cell("adl", Some(variant))
                    });
                }
            }
        }
    }
    cells
}

/// Runs every grid cell and writes one consolidated CSV plus per-cell curves.
pub fn cmd_grid(cfg: &HarnessConfig, out: &Path) -> Result<Vec<ReportRow>> {
    let (dataset, splits) = load_and_split(cfg, None)?;
    let cells = grid_cells(cfg);
    let configs: Vec<Option<AdlConfig>> = cells
        .iter()
        .map(|c| match c.method.as_str() {
            "rf" => Ok(None),
            _ => adl_config(
                cfg,
                splits.partition(c.prediction_type).len(),
                c.delta,
                c.variant.unwrap_or(QueryVariant::Rnd),
                c.variable.unwrap_or(cfg.variable),
            )
            .map(Some),
        })
        .collect::<Result<_>>()?;
    fs::create_dir_all(out.join("curves"))?;
    let (initial, _) = pretrained(cfg, &dataset, &splits)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let forest = rf_baseline(&dataset, &splits, &forest_config(cfg))?;
    let outcomes: Vec<Result<Option<ExperimentReport>>> = pool.install(|| {
        cells
            .par_iter()
            .zip(&configs)
            .map(|(cell, adl)| {
                let Some(adl) = adl else { return Ok(None) };
                let problem = Problem {
                    dataset: &dataset,
                    splits: &splits,
                    prediction_type: cell.prediction_type,
                    train: &cfg.train,
                };
                let method = if cell.method == "pdl" { MethodKind::Pdl } else { MethodKind::Adl };
                run_cell(method, adl, &problem, &initial, |_| Ok(())).map(|(r, _)| Some(r))
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(cells.len());
    let mut rf_losses: Vec<(PredictionType, Result<f64>)> = Vec::new();
    for &kind in &cfg.prediction_types {
        rf_losses.push((kind, forest.loss(&dataset.samples(splits.partition(kind)))));
    }
    for (cell, outcome) in cells.iter().zip(&outcomes) {
        let rf = rf_losses
            .iter()
            .find(|(k, _)| *k == cell.prediction_type)
            .and_then(|(_, l)| l.as_ref().ok().copied());
        let row = match (cell.method.as_str(), outcome) {
            ("rf", _) => match rf_losses.iter().find(|(k, _)| *k == cell.prediction_type) {
                Some((_, Ok(loss))) => ReportRow::baseline(cell, *loss),
                Some((_, Err(e))) => ReportRow::failed(cell, e),
                None => ReportRow::failed(cell, &Error::Invariant("missing baseline".into())),
            },
            (_, Ok(Some(report))) => {
                write_curve(&out.join("curves").join(cell.curve_file_name()), &report.iterations)?;
                ReportRow::from_outcome(cell, Ok(report), rf)
            }
            (_, Ok(None)) => ReportRow::failed(cell, &Error::Invariant("cell produced no report".into())),
            (_, Err(e)) => {
                log::warn!("grid cell {} failed: {e}", cell.curve_file_name());
                ReportRow::failed(cell, e)
            }
        };
        rows.push(row);
    }
    write_report(&out.join(GRID_FILE), &rows)?;
    Ok(rows)
}

/// Original and reshuffled retraining traces of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayComparison {
    pub original: ReplayTrace,
    pub shuffled: ReplayTrace,
}

pub fn cmd_replay(cfg: &HarnessConfig, artifacts: &Path, out: &Path) -> Result<ReplayComparison> {
    let need = |name: &str| -> Result<PathBuf> {
        let p = artifacts.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::invalid(format!("missing run artifact `{}`", p.display())))
        }
    };
    let record: RunRecord = serde_json::from_reader(File::open(need(RUN_FILE)?)?)?;
    let initial = load_weights(&need(WEIGHTS_FILE)?)?;
    let splits = load_splits(&need(SPLITS_FILE)?)?;
    let (dataset, splits) = load_and_split(cfg, Some(splits))?;
    let problem = Problem {
        dataset: &dataset,
        splits: &splits,
        prediction_type: record.report.prediction_type,
        train: &record.train,
    };
    let setup = ReplaySetup {
        problem,
        cfg: &record.adl,
        initial_net: &initial,
        eval_ids: &record.never_queried,
    };
    let shuffle_seed = derived(cfg, "harness.replay");
    let original = replay_sequence(&record.report.iterations, false, shuffle_seed, &setup)?;
    let shuffled = replay_sequence(&record.report.iterations, true, shuffle_seed, &setup)?;
    fs::create_dir_all(out)?;
    report::write_replay(&out.join(REPLAY_FILE), &original, &shuffled)?;
    Ok(ReplayComparison { original, shuffled })
}
