use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForestConfig;
use crate::nn::Sample;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: Vec<f64>, count: usize },
}

/// Nodes in creation order; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> &[f64] {
        match self.leaf_for(x) {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
    /// Sample positions sorted by the split feature; the first `left` go left.
    order: Vec<usize>,
    left: usize,
}

struct Builder<'a, 'b> {
    data: &'b [Sample<'a>],
    cfg: &'b ForestConfig,
    mtry: usize,
    nodes: Vec<Node>,
}

fn mean_label(data: &[Sample<'_>], idx: &[usize], d_y: usize) -> Vec<f64> {
    let mut m = vec![0.0; d_y];
    for &i in idx {
        for (a, v) in m.iter_mut().zip(data[i].y) {
            *a += v;
        }
    }
    let n = idx.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Total per-output sum of squared deviations from running sums.
fn sse(sum: &[f64], sum_sq: &[f64], n: usize) -> f64 {
    let n = n as f64;
    sum.iter().zip(sum_sq).map(|(s, q)| (q - s * s / n).max(0.0)).sum()
}

impl<'a, 'b> Builder<'a, 'b> {
    fn is_pure(&self, idx: &[usize]) -> bool {
        let y0 = self.data[idx[0]].y;
        idx.iter().all(|&i| self.data[i].y == y0)
    }

    fn best_for_feature(&self, idx: &[usize], feature: usize, parent_sse: f64) -> Option<Best> {
        let data = self.data;
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| data[a].x[feature].total_cmp(&data[b].x[feature]).then(a.cmp(&b)));
        let n = order.len();
        let d_y = data[order[0]].y.len();
        let (mut total, mut total_sq) = (vec![0.0; d_y], vec![0.0; d_y]);
        for &i in &order {
            for ((s, q), v) in total.iter_mut().zip(total_sq.iter_mut()).zip(data[i].y) {
                *s += v;
                *q += v * v;
            }
        }
        let (mut left, mut left_sq) = (vec![0.0; d_y], vec![0.0; d_y]);
        let (mut right, mut right_sq) = (vec![0.0; d_y], vec![0.0; d_y]);
        let min_leaf = self.cfg.min_leaf_size;
        let mut best: Option<(f64, usize)> = None;
        for pos in 1..n {
            for ((s, q), v) in left.iter_mut().zip(left_sq.iter_mut()).zip(data[order[pos - 1]].y) {
                *s += v;
                *q += v * v;
            }
            let (lo, hi) = (data[order[pos - 1]].x[feature], data[order[pos]].x[feature]);
            if pos < min_leaf || n - pos < min_leaf || lo == hi {
                continue;
            }
            for d in 0..d_y {
                right[d] = total[d] - left[d];
                right_sq[d] = total_sq[d] - left_sq[d];
            }
            let gain = parent_sse - sse(&left, &left_sq, pos) - sse(&right, &right_sq, n - pos);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, pos));
            }
        }
        best.map(|(gain, pos)| {
            let (lo, hi) = (data[order[pos - 1]].x[feature], data[order[pos]].x[feature]);
            let mid = lo + (hi - lo) / 2.0;
            // the midpoint may round up to `hi`
            let threshold = if mid < hi { mid } else { lo };
            Best {
                feature,
                threshold,
                gain,
                order,
                left: pos,
            }
        })
    }

    /// Examines features in random order until `mtry` of them admit a split.
    fn best_split(&self, idx: &[usize], rng: &mut seed::Rng) -> Option<Best> {
        let d_y = self.data[idx[0]].y.len();
        let (mut s, mut q) = (vec![0.0; d_y], vec![0.0; d_y]);
        for &i in idx {
            for ((a, b), v) in s.iter_mut().zip(q.iter_mut()).zip(self.data[i].y) {
                *a += v;
                *b += v * v;
            }
        }
        let parent = sse(&s, &q, idx.len());
        let mut features: Vec<usize> = (0..self.data[idx[0]].x.len()).collect();
        features.shuffle(rng);
        let mut best: Option<Best> = None;
        let mut usable = 0;
        for f in features {
            if usable == self.mtry {
                break;
            }
            if let Some(b) = self.best_for_feature(idx, f, parent) {
                usable += 1;
                if best.as_ref().is_none_or(|cur| b.gain > cur.gain) {
                    best = Some(b);
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut seed::Rng) -> usize {
        let at = self.nodes.len();
        let d_y = self.data[idx[0]].y.len();
        self.nodes.push(Node::Leaf {
            value: mean_label(self.data, &idx, d_y),
            count: idx.len(),
        });
        let depth_ok = self.cfg.max_depth.is_none_or(|m| depth < m);
        if !depth_ok || idx.len() < 2 * self.cfg.min_leaf_size || self.is_pure(&idx) {
            return at;
        }
        let Some(best) = self.best_split(&idx, rng) else {
            return at;
        };
        let (l, r) = best.order.split_at(best.left);
        let left = self.grow(l.to_vec(), depth + 1, rng);
        let right = self.grow(r.to_vec(), depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }
}

pub(super) fn fit(data: &[Sample<'_>], cfg: &ForestConfig, rng: &mut seed::Rng) -> RegressionTree {
    let n = data.len();
    let idx: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut b = Builder {
        data,
        cfg,
        mtry: cfg.features_for(data[0].x.len()),
        nodes: Vec::new(),
    };
    b.grow(idx, 0, rng);
    RegressionTree { nodes: b.nodes }
}
