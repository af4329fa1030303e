use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;
/// Lloyd stops once the relative SSE decrease falls below this.
pub const SSE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub centers: Vec<Vec<f64>>,
    pub membership: Vec<usize>,
    pub within_cluster_sse: f64,
    /// SSE after every Lloyd iteration; non-increasing.
    pub sse_history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &m in &self.membership {
            sizes[m] += 1;
        }
        sizes
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 compare equal
    v.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

pub fn distinct_count(vectors: &[Vec<f64>]) -> usize {
    vectors.iter().map(|v| bits(v)).collect::<HashSet<_>>().len()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center per vector (ties to the lower center index) and its squared distance.
fn assign(vectors: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<(usize, f64)> {
    vectors
        .par_iter()
        .map(|v| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(v, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

fn seed_centers(vectors: &[Vec<f64>], k: usize, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![vectors[rng.gen_range(0..vectors.len())].clone()];
    let mut nearest: Vec<f64> = vectors.par_iter().map(|v| sq_dist(v, &centers[0])).collect();
    while centers.len() < k {
        // distinct > k keeps at least one positive weight
        let pick = WeightedIndex::new(&nearest).expect("positive D^2 mass").sample(rng);
        let center = vectors[pick].clone();
        nearest
            .par_iter_mut()
            .zip(vectors)
            .for_each(|(d, v)| *d = d.min(sq_dist(v, &center)));
        centers.push(center);
    }
    centers
}

/// Moves the globally farthest point into each empty cluster.
fn repair(vectors: &[Vec<f64>], centers: &mut [Vec<f64>], assigned: &mut [(usize, f64)]) {
    loop {
        let mut sizes = vec![0usize; centers.len()];
        for &(c, _) in assigned.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, &(c, d)) in assigned.iter().enumerate() {
            if sizes[c] > 1 && far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("n > k leaves a cluster with two members");
        centers[empty] = vectors[i].clone();
        assigned[i] = (empty, 0.0);
    }
}

fn means(vectors: &[Vec<f64>], assigned: &[(usize, f64)], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &(c, _)) in vectors.iter().zip(assigned) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(v) {
            *s += x;
        }
    }
    for (s, n) in sums.iter_mut().zip(counts) {
        let n = n as f64;
        s.iter_mut().for_each(|x| *x /= n);
    }
    sums
}

/// K-means++ seeding followed by Lloyd iterations.
///
/// The returned centers are the ones the final membership was assigned
/// against, so every vector sits with its nearest center.
pub fn kmeans_pp(vectors: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite embedded vector"));
    }
    let distinct = distinct_count(vectors);
    if distinct <= k {
        return Err(Error::DegenerateClustering { distinct, k });
    }

    let mut rng = seed::rng(seed);
    let mut centers = seed_centers(vectors, k, &mut rng);
    let mut assigned = assign(vectors, &centers);
    repair(vectors, &mut centers, &mut assigned);
    let mut sse_history = Vec::new();
    let mut prev_sse = assigned.iter().map(|a| a.1).sum::<f64>();

    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut next_centers = means(vectors, &assigned, k, dim);
        let mut next = assign(vectors, &next_centers);
        repair(vectors, &mut next_centers, &mut next);
        let sse = next.iter().map(|a| a.1).sum::<f64>();
        let unchanged = next.iter().zip(&assigned).all(|(a, b)| a.0 == b.0);
        centers = next_centers;
        assigned = next;
        sse_history.push(sse);
        let converged = prev_sse <= 0.0 || (prev_sse - sse) / prev_sse < SSE_TOLERANCE;
        prev_sse = sse;
        if unchanged || converged {
            break;
        }
    }

    Ok(ClusterAssignment {
        centers,
        membership: assigned.iter().map(|a| a.0).collect(),
        within_cluster_sse: prev_sse,
        sse_history,
    })
}
