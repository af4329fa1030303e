use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

/// `1 - min(1, model_loss / rf_loss)`.
pub fn accuracy(model_loss: f64, rf_loss: f64) -> Result<f64> {
    if rf_loss.is_nan() || rf_loss <= 0.0 {
        return Err(Error::invalid(format!("baseline loss must be positive, got {rf_loss}")));
    }
    if model_loss.is_nan() || model_loss < 0.0 {
        return Err(Error::invalid(format!("model loss must be non-negative, got {model_loss}")));
    }
    Ok(1.0 - (model_loss / rf_loss).min(1.0))
}

/// Percentage rounded half-up to an integer, from a fraction or a percentage.
pub fn percent(pct: f64) -> u32 {
    (pct + 0.5).floor().max(0.0) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub data_pct: f64,
    pub sensors_pct: f64,
}

/// Data share of the budget, and the share of new buildings in the pool that
/// were queried at least once.
pub fn compute_usage(
    dataset: &Dataset,
    choice: &BTreeSet<usize>,
    avail: &[usize],
    initial_pool: &[usize],
    n_budget: usize,
) -> Result<Usage> {
    if n_budget == 0 {
        return Err(Error::invalid("usage is undefined for a zero budget"));
    }
    let building = |i: &usize| dataset.points[*i].building_id;
    let sensed: HashSet<u32> = avail.iter().map(building).collect();
    let new_in_pool: HashSet<u32> = initial_pool.iter().map(building).filter(|b| !sensed.contains(b)).collect();
    let new_chosen: HashSet<u32> = choice.iter().map(building).filter(|b| !sensed.contains(b)).collect();
    let sensors_pct = if new_in_pool.is_empty() {
        0.0
    } else {
        100.0 * new_chosen.len() as f64 / new_in_pool.len() as f64
    };
    Ok(Usage {
        data_pct: 100.0 * choice.len() as f64 / n_budget as f64,
        sensors_pct,
    })
}
