//! Multi-output random-forest regression, the common baseline for accuracy.

mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetSplits, PredictionType};
use crate::nn::{mse_loss, Sample};
use crate::seed;
use crate::{Error, Result};

pub use tree::{Node, RegressionTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf_size: usize,
    /// `None` means `ceil(sqrt(d_x))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_leaf_size: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_leaf_size == 0 {
            return Err(Error::invalid("min_leaf_size must be at least 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::invalid("features_per_split must be at least 1"));
        }
        Ok(())
    }

    pub fn features_for(&self, d_x: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (d_x as f64).sqrt().ceil() as usize)
            .clamp(1, d_x.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    pub d_x: usize,
    pub d_y: usize,
}

/// Fits every tree independently; tree `i` draws from its own derived seed.
pub fn rf_fit(train: &[Sample<'_>], cfg: &ForestConfig) -> Result<Forest> {
    cfg.validate()?;
    let first = train.first().ok_or_else(|| Error::invalid("random forest needs training data"))?;
    let (d_x, d_y) = (first.x.len(), first.y.len());
    if let Some(s) = train.iter().find(|s| s.x.len() != d_x || s.y.len() != d_y) {
        return Err(Error::ShapeMismatch {
            expected: d_x + d_y,
            got: s.x.len() + s.y.len(),
        });
    }
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::derived_rng(cfg.seed, "forest.tree", t as u64);
            tree::fit(train, cfg, &mut rng)
        })
        .collect();
    Ok(Forest { trees, d_x, d_y })
}

impl Forest {
    /// Mean of the tree predictions.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_x {
            return Err(Error::ShapeMismatch {
                expected: self.d_x,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.d_y];
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.predict(x)) {
                *o += v;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        Ok(out)
    }

    /// Average per-sample L2 loss, matching the network's dataset loss.
    pub fn loss(&self, data: &[Sample<'_>]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::invalid("forest loss over an empty dataset"));
        }
        let losses: Vec<f64> = data
            .par_iter()
            .map(|s| mse_loss(&self.predict(s.x)?, s.y))
            .collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / data.len() as f64)
    }
}

pub fn rf_predict(forest: &Forest, x: &[f64]) -> Result<Vec<f64>> {
    forest.predict(x)
}

/// Forest fitted on the available set only.
pub fn rf_baseline(dataset: &Dataset, splits: &DatasetSplits, cfg: &ForestConfig) -> Result<Forest> {
    rf_fit(&dataset.samples(&splits.avail), cfg)
}

/// Baseline loss of a forest fitted on the available set, measured on `test`.
pub fn rf_baseline_loss(
    dataset: &Dataset,
    splits: &DatasetSplits,
    test: PredictionType,
    cfg: &ForestConfig,
) -> Result<f64> {
    let ids = splits.partition(test);
    if ids.is_empty() {
        return Err(Error::invalid(format!("{} partition is empty", test.name())));
    }
    rf_baseline(dataset, splits, cfg)?.loss(&dataset.samples(ids))
}
