//! Flat `key = value` run configuration.
//!
//! One file fully determines a run. Blank lines and `#` comments are ignored;
//! lists are comma-separated. Unknown keys are rejected so typos surface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{PredictionType, SyntheticConfig};
use crate::embedding::{EmbeddingNetConfig, EncoderId};
use crate::engine::DEFAULT_ITERATIONS;
use crate::forest::ForestConfig;
use crate::nn::TrainConfig;
use crate::selection::QueryVariant;
use crate::{Error, Result};

const KEYS: &[&str] = &[
    "seed",
    "dataset",
    "artifacts",
    "n_buildings",
    "n_timestamps",
    "noise_scale",
    "shift_strength",
    "hidden_width",
    "embedding_dim",
    "conv_filters",
    "conv_kernel",
    "max_epochs",
    "patience",
    "learning_rate",
    "minibatch_size",
    "rf_trees",
    "rf_max_depth",
    "rf_min_leaf",
    "rf_features",
    "rf_bootstrap",
    "prediction_type",
    "method",
    "variable",
    "variant",
    "delta",
    "n_iter",
    "budget_fraction",
    "n_budget",
    "n_batch",
    "pool_cap",
    "cumulative_training",
    "freeze_model",
    "oracle_mode",
    "prediction_types",
    "deltas",
    "variants",
    "include_time_space",
    "workers",
];

/// Raw entries with the line each came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, format!("duplicate key on line {}", n + 1)));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
        RawConfig::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::config(key, format!("expected {what}, got `{v}`")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, what: &str, default: T) -> Result<T> {
        Ok(self.parsed(key, what)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str, what: &str) -> Result<T> {
        self.parsed(key, what)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn list<T>(&self, key: &str, default: Vec<T>, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse(s).ok_or_else(|| Error::config(key, format!("unrecognized item `{s}`"))))
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::config(key, "empty list"));
        }
        Ok(items)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Adl,
    Pdl,
}

/// Typed view of a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessConfig {
    pub raw: RawConfig,
    pub seed: u64,
    pub hidden_width: usize,
    pub embedding_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub train: TrainConfig,
    pub forest: ForestConfig,
    pub prediction_type: PredictionType,
    pub method: MethodKind,
    pub variable: EncoderId,
    pub variant: QueryVariant,
    pub delta: f64,
    pub n_iter: usize,
    pub budget_fraction: f64,
    pub n_budget: Option<usize>,
    pub n_batch: Option<usize>,
    pub pool_cap: Option<usize>,
    pub cumulative_training: bool,
    pub freeze_model: bool,
    pub oracle_mode: bool,
    pub prediction_types: Vec<PredictionType>,
    pub deltas: Vec<f64>,
    pub variants: Vec<QueryVariant>,
    pub include_time_space: bool,
    /// 0 uses every core.
    pub workers: usize,
}

fn candidate_type(s: &str) -> Option<PredictionType> {
    PredictionType::parse(s).filter(|t| *t != PredictionType::InSample)
}

impl HarnessConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let d = TrainConfig::default();
        let f = ForestConfig::default();
        let n = EmbeddingNetConfig::default();
        let method = match raw.get("method").unwrap_or("adl") {
            "adl" => MethodKind::Adl,
            "pdl" => MethodKind::Pdl,
            other => return Err(Error::config("method", format!("expected adl or pdl, got `{other}`"))),
        };
        let prediction_type = match raw.get("prediction_type") {
            None => PredictionType::SpatioTemporal,
            Some(s) => candidate_type(s).ok_or_else(|| {
                Error::config("prediction_type", format!("expected spatial, temporal or spatio_temporal, got `{s}`"))
            })?,
        };
        let variable = match raw.get("variable") {
            None => EncoderId::PredictedLabel,
            Some(s) => EncoderId::parse(s).ok_or_else(|| Error::config("variable", format!("unknown variable `{s}`")))?,
        };
        let variant = match raw.get("variant") {
            None => QueryVariant::Max,
            Some(s) => QueryVariant::parse(s).map_err(|_| Error::config("variant", format!("unknown variant `{s}`")))?,
        };
        let seed = raw.or("seed", "an unsigned integer", 0u64)?;
        let cfg = HarnessConfig {
            seed,
            hidden_width: raw.or("hidden_width", "a count", n.hidden_width)?,
            embedding_dim: raw.or("embedding_dim", "a count", n.embedding_dim)?,
            conv_filters: raw.or("conv_filters", "a count", n.conv_filters)?,
            conv_kernel: raw.or("conv_kernel", "a count", n.conv_kernel)?,
            train: TrainConfig {
                max_epochs: raw.or("max_epochs", "a count", d.max_epochs)?,
                patience: raw.or("patience", "a count", d.patience)?,
                learning_rate: raw.or("learning_rate", "a number", d.learning_rate)?,
                minibatch_size: raw.or("minibatch_size", "a count", d.minibatch_size)?,
                seed: 0,
            },
            forest: ForestConfig {
                n_trees: raw.or("rf_trees", "a count", f.n_trees)?,
                max_depth: raw.parsed("rf_max_depth", "a count")?,
                min_leaf_size: raw.or("rf_min_leaf", "a count", f.min_leaf_size)?,
                features_per_split: raw.parsed("rf_features", "a count")?,
                bootstrap: raw.or("rf_bootstrap", "true or false", f.bootstrap)?,
                seed: 0,
            },
            prediction_type,
            method,
            variable,
            variant,
            delta: raw.or("delta", "a number in [0, 1]", 1.0)?,
            n_iter: raw.or("n_iter", "a count", DEFAULT_ITERATIONS)?,
            budget_fraction: raw.or("budget_fraction", "a number in (0, 1]", 0.5)?,
            n_budget: raw.parsed("n_budget", "a count")?,
            n_batch: raw.parsed("n_batch", "a count")?,
            pool_cap: raw.parsed("pool_cap", "a count")?,
            cumulative_training: raw.or("cumulative_training", "true or false", false)?,
            freeze_model: raw.or("freeze_model", "true or false", false)?,
            oracle_mode: raw.or("oracle_mode", "true or false", false)?,
            prediction_types: raw.list("prediction_types", PredictionType::CANDIDATES.to_vec(), candidate_type)?,
            deltas: raw.list("deltas", vec![0.0, 1.0], |s| s.parse().ok())?,
            variants: raw.list("variants", QueryVariant::ALL.to_vec(), |s| QueryVariant::parse(s).ok())?,
            include_time_space: raw.or("include_time_space", "true or false", false)?,
            workers: raw.or("workers", "a count", 0)?,
            raw,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        HarnessConfig::from_raw(RawConfig::load(path)?)
    }

    fn validate(&self) -> Result<()> {
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(Error::config("budget_fraction", "must lie in (0, 1]"));
        }
        if self.n_iter == 0 {
            return Err(Error::config("n_iter", "must be at least 1"));
        }
        for (key, d) in std::iter::once(("delta", self.delta)).chain(self.deltas.iter().map(|d| ("deltas", *d))) {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::config(key, format!("{d} is outside [0, 1]")));
            }
        }
        if self.variable == EncoderId::TrueLabel && !self.oracle_mode {
            return Err(Error::config("variable", "the true-label variable requires oracle_mode = true"));
        }
        self.train
            .validate()
            .map_err(|e| Error::config("max_epochs", e.to_string()))?;
        self.forest.validate().map_err(|e| Error::config("rf_trees", e.to_string()))?;
        Ok(())
    }

    pub fn dataset_path(&self) -> Result<PathBuf> {
        self.raw
            .get("dataset")
            .map(PathBuf::from)
            .ok_or_else(|| Error::config("dataset", "missing required key"))
    }

    pub fn artifacts_path(&self) -> Option<PathBuf> {
        self.raw.get("artifacts").map(PathBuf::from)
    }

    /// Generator settings; the dataset shape keys are required.
    pub fn synthetic(&self) -> Result<SyntheticConfig> {
        let d = SyntheticConfig::default();
        Ok(SyntheticConfig {
            n_buildings: self.raw.required("n_buildings", "a count")?,
            n_timestamps: self.raw.required("n_timestamps", "a count")?,
            noise_scale: self.raw.or("noise_scale", "a number", d.noise_scale)?,
            shift_strength: self.raw.or("shift_strength", "a number", d.shift_strength)?,
            seed: self.seed,
        })
    }

    /// ADL variables of the grid, in table order.
    pub fn grid_variables(&self) -> Vec<EncoderId> {
        let mut v = Vec::new();
        if self.include_time_space {
            v.extend([EncoderId::Time, EncoderId::Space]);
        }
        v.extend([EncoderId::SpaceTime, EncoderId::Joint, EncoderId::PredictedLabel]);
        if self.oracle_mode {
            v.push(EncoderId::TrueLabel);
        }
        v
    }
}
