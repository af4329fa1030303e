use std::collections::{BTreeSet, HashSet};

use crate::{Error, Result};

/// Sets tracked across iterations, as point ids into the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineState {
    pub avail: Vec<usize>,
    /// Current candidate pool in a stable order.
    pub pool: Vec<usize>,
    pub initial_pool: Vec<usize>,
    pub choice: BTreeSet<usize>,
    pub c_budget: usize,
    pub c_iter: usize,
}

impl EngineState {
    pub fn new(avail: &[usize], pool: &[usize]) -> Self {
        EngineState {
            avail: avail.to_vec(),
            pool: pool.to_vec(),
            initial_pool: pool.to_vec(),
            choice: BTreeSet::new(),
            c_budget: 0,
            c_iter: 0,
        }
    }

    /// Initial candidates absent from the chosen set, in pool order.
    pub fn never_queried(&self) -> Vec<usize> {
        self.initial_pool
            .iter()
            .copied()
            .filter(|i| !self.choice.contains(i))
            .collect()
    }

    pub fn check(&self, n_budget: usize) -> Result<()> {
        let avail: HashSet<usize> = self.avail.iter().copied().collect();
        if let Some(i) = self.pool.iter().find(|i| avail.contains(i)) {
            return Err(Error::Invariant(format!("point {i} is both available and a candidate")));
        }
        let initial: HashSet<usize> = self.initial_pool.iter().copied().collect();
        if let Some(i) = self.choice.iter().find(|i| !initial.contains(i)) {
            return Err(Error::Invariant(format!("chosen point {i} was never a candidate")));
        }
        if self.c_budget != self.choice.len() || self.c_budget > n_budget {
            return Err(Error::Invariant(format!(
                "c_budget {} with {} chosen points and budget {n_budget}",
                self.c_budget,
                self.choice.len()
            )));
        }
        Ok(())
    }
}
