//! Cluster-based batch selection over embedded candidates.
//!
//! Candidates are clustered with K-means++ and scored by the Laplacian
//! similarity to their own cluster center. One candidate per cluster is then
//! picked according to a [`QueryVariant`].

mod kmeans;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub use kmeans::{distinct_count, kmeans_pp, ClusterAssignment, MAX_LLOYD_ITERATIONS, SSE_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryVariant {
    /// Uniform pick per cluster.
    Rnd,
    /// Farthest from the center: lowest similarity.
    Max,
    /// Closest to the center: highest similarity.
    Min,
    /// Largest deviation from the cluster's mean similarity.
    Avg,
}

impl QueryVariant {
    pub const ALL: [QueryVariant; 4] = [QueryVariant::Rnd, QueryVariant::Max, QueryVariant::Min, QueryVariant::Avg];

    pub fn name(self) -> &'static str {
        match self {
            QueryVariant::Rnd => "rnd",
            QueryVariant::Max => "max",
            QueryVariant::Min => "min",
            QueryVariant::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        QueryVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown query variant `{s}`")))
    }
}

impl std::fmt::Display for QueryVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `exp(-|v - center|_1 / n_e)`, in (0, 1].
pub fn laplacian_similarity(v: &[f64], center: &[f64], n_e: usize) -> Result<f64> {
    if v.len() != center.len() {
        return Err(Error::ShapeMismatch {
            expected: center.len(),
            got: v.len(),
        });
    }
    if n_e == 0 {
        return Err(Error::invalid("embedding length must be at least 1"));
    }
    let l1: f64 = v.iter().zip(center).map(|(a, b)| (a - b).abs()).sum();
    Ok((-l1 / n_e as f64).exp())
}

/// Similarity of every vector to its own cluster center.
pub fn score_candidates(assignment: &ClusterAssignment, vectors: &[Vec<f64>], n_e: usize) -> Result<Vec<f64>> {
    if assignment.membership.len() != vectors.len() {
        return Err(Error::ShapeMismatch {
            expected: assignment.membership.len(),
            got: vectors.len(),
        });
    }
    vectors
        .par_iter()
        .zip(&assignment.membership)
        .map(|(v, &m)| {
            let center = assignment
                .centers
                .get(m)
                .ok_or_else(|| Error::Invariant(format!("membership {m} has no center")))?;
            laplacian_similarity(v, center, n_e)
        })
        .collect()
}

/// Members of each cluster in ascending index order.
pub fn cluster_members(assignment: &ClusterAssignment) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); assignment.k()];
    for (i, &m) in assignment.membership.iter().enumerate() {
        if let Some(c) = members.get_mut(m) {
            c.push(i);
        }
    }
    members
}

/// First index maximizing `key`; earlier indices win ties.
fn argmax_by(members: &[usize], key: impl Fn(usize) -> f64) -> usize {
    let mut best = members[0];
    let mut best_key = key(best);
    for &i in &members[1..] {
        let k = key(i);
        if k > best_key {
            best = i;
            best_key = k;
        }
    }
    best
}

/// One candidate index per cluster, in cluster order.
pub fn select_batch(
    variant: QueryVariant,
    assignment: &ClusterAssignment,
    scores: &[f64],
    seed: u64,
) -> Result<Vec<usize>> {
    if scores.len() != assignment.membership.len() {
        return Err(Error::ShapeMismatch {
            expected: assignment.membership.len(),
            got: scores.len(),
        });
    }
    let mut rng = seed::rng(seed);
    cluster_members(assignment)
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            if members.is_empty() {
                return Err(Error::Invariant(format!("cluster {c} is empty")));
            }
            Ok(match variant {
                QueryVariant::Rnd => members[rng.gen_range(0..members.len())],
                QueryVariant::Max => argmax_by(&members, |i| -scores[i]),
                QueryVariant::Min => argmax_by(&members, |i| scores[i]),
                QueryVariant::Avg => {
                    let mean = members.iter().map(|&i| scores[i]).sum::<f64>() / members.len() as f64;
                    argmax_by(&members, |i| (scores[i] - mean).abs())
                }
            })
        })
        .collect()
}
