use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, LabeledPoint, TimePoint};
use crate::seed;
use crate::{Error, Result};

const AVAIL_FRACTION: f64 = 0.03;
/// Seen buildings and seen time stamps are each this fraction of the total, so
/// that in-sample points make up 9% of the grid (3% available + 6% validation)
/// and the candidates split 21/21/49 of the grid, i.e. 23/23/54 of the pool.
const SEEN_FRACTION: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictionType {
    Spatial,
    Temporal,
    SpatioTemporal,
    InSample,
}

impl PredictionType {
    pub fn name(&self) -> &'static str {
        match self {
            PredictionType::Spatial => "spatial",
            PredictionType::Temporal => "temporal",
            PredictionType::SpatioTemporal => "spatio_temporal",
            PredictionType::InSample => "in_sample",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spatial" => Some(PredictionType::Spatial),
            "temporal" => Some(PredictionType::Temporal),
            "spatio_temporal" | "spatiotemporal" => Some(PredictionType::SpatioTemporal),
            "in_sample" => Some(PredictionType::InSample),
            _ => None,
        }
    }

    /// The three candidate partitions, in report order.
    pub const CANDIDATES: [PredictionType; 3] = [
        PredictionType::Spatial,
        PredictionType::Temporal,
        PredictionType::SpatioTemporal,
    ];
}

/// Point indices of every partition. All five sets are disjoint and together
/// cover the dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub avail: Vec<usize>,
    pub val: Vec<usize>,
    pub spatial: Vec<usize>,
    pub temporal: Vec<usize>,
    pub spatio_temporal: Vec<usize>,
}

impl DatasetSplits {
    pub fn partition(&self, kind: PredictionType) -> &[usize] {
        match kind {
            PredictionType::Spatial => &self.spatial,
            PredictionType::Temporal => &self.temporal,
            PredictionType::SpatioTemporal => &self.spatio_temporal,
            PredictionType::InSample => &self.val,
        }
    }

    pub fn candidates(&self) -> Vec<usize> {
        let mut all = Vec::with_capacity(self.spatial.len() + self.temporal.len() + self.spatio_temporal.len());
        all.extend_from_slice(&self.spatial);
        all.extend_from_slice(&self.temporal);
        all.extend_from_slice(&self.spatio_temporal);
        all
    }

    pub fn total(&self) -> usize {
        self.avail.len() + self.val.len() + self.spatial.len() + self.temporal.len() + self.spatio_temporal.len()
    }

    /// Checks disjointness, coverage of `0..n` and the seen/unseen rules.
    pub fn check(&self, dataset: &Dataset) -> Result<()> {
        let n = dataset.len();
        let mut seen = vec![false; n];
        for &i in self
            .avail
            .iter()
            .chain(&self.val)
            .chain(&self.spatial)
            .chain(&self.temporal)
            .chain(&self.spatio_temporal)
        {
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("point {i} is out of range or in two partitions")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("partitions do not cover the dataset"));
        }
        let avail: Vec<&LabeledPoint> = self.avail.iter().map(|&i| &dataset.points[i]).collect();
        let (buildings, times) = seen_sets(avail.iter().copied());
        for kind in PredictionType::CANDIDATES {
            for &i in self.partition(kind) {
                let got = classify_with(&dataset.points[i], &buildings, &times);
                if got != kind {
                    return Err(Error::invalid(format!(
                        "point {i} in {} partition classifies as {}",
                        kind.name(),
                        got.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn seen_sets<'a>(points: impl Iterator<Item = &'a LabeledPoint>) -> (HashSet<u32>, HashSet<TimePoint>) {
    let mut buildings = HashSet::new();
    let mut times = HashSet::new();
    for p in points {
        buildings.insert(p.building_id);
        times.insert(p.time);
    }
    (buildings, times)
}

fn classify_with(point: &LabeledPoint, buildings: &HashSet<u32>, times: &HashSet<TimePoint>) -> PredictionType {
    match (buildings.contains(&point.building_id), times.contains(&point.time)) {
        (true, true) => PredictionType::InSample,
        (true, false) => PredictionType::Temporal,
        (false, true) => PredictionType::Spatial,
        (false, false) => PredictionType::SpatioTemporal,
    }
}

/// Prediction type of `point` relative to the buildings and time stamps that
/// occur in `avail`.
pub fn classify_prediction_type<'a>(
    point: &LabeledPoint,
    avail: impl IntoIterator<Item = &'a LabeledPoint>,
) -> PredictionType {
    let (buildings, times) = seen_sets(avail.into_iter());
    classify_with(point, &buildings, &times)
}

fn seen_count(total: usize) -> usize {
    ((total as f64 * SEEN_FRACTION).round() as usize).clamp(1, total.saturating_sub(1).max(1))
}

/// Splits a dataset into available, validation and candidate partitions.
///
/// A subset of buildings (spanning every archetype) and a subset of time
/// stamps are marked as seen. Points with both seen become the in-sample pool,
/// from which 3% of the data is drawn as the initially available set so that
/// every seen building and time stamp occurs in it; the rest of the in-sample
/// pool is validation. All other points are candidates, partitioned by the
/// seen/unseen rules.
pub fn split(dataset: &Dataset, seed: u64) -> Result<DatasetSplits> {
    dataset.validate()?;
    let mut rng = seed::derived_rng(seed, "split", 0);

    let mut by_building: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut all_times: BTreeSet<TimePoint> = BTreeSet::new();
    for (i, p) in dataset.points.iter().enumerate() {
        by_building.entry(p.building_id).or_default().push(i);
        all_times.insert(p.time);
    }
    let n_buildings = by_building.len();
    let n_times = all_times.len();
    if n_buildings < 2 {
        return Err(Error::invalid(format!(
            "split needs at least 2 distinct buildings, found {n_buildings}"
        )));
    }
    if n_times < 2 {
        return Err(Error::invalid(format!(
            "split needs at least 2 distinct time stamps, found {n_times}"
        )));
    }

    // Seen buildings: one per archetype first, then uniformly at random.
    let mut building_ids: Vec<u32> = by_building.keys().copied().collect();
    building_ids.shuffle(&mut rng);
    let n_seen_b = seen_count(n_buildings);
    let mut seen_b: Vec<u32> = Vec::with_capacity(n_seen_b);
    let mut covered = BTreeSet::new();
    for &b in &building_ids {
        let arch = dataset.archetype_of(b).unwrap_or(0);
        if seen_b.len() < n_seen_b && covered.insert(arch) {
            seen_b.push(b);
        }
    }
    for &b in &building_ids {
        if seen_b.len() >= n_seen_b {
            break;
        }
        if !seen_b.contains(&b) {
            seen_b.push(b);
        }
    }

    let mut times: Vec<TimePoint> = all_times.into_iter().collect();
    times.shuffle(&mut rng);
    let n_seen_t = seen_count(n_times);
    let seen_t: Vec<TimePoint> = times[..n_seen_t].to_vec();

    let seen_b_set: HashSet<u32> = seen_b.iter().copied().collect();
    let seen_t_set: HashSet<TimePoint> = seen_t.iter().copied().collect();

    let mut splits = DatasetSplits::default();
    let mut in_sample: Vec<usize> = Vec::new();
    for (i, p) in dataset.points.iter().enumerate() {
        match classify_with(p, &seen_b_set, &seen_t_set) {
            PredictionType::InSample => in_sample.push(i),
            PredictionType::Spatial => splits.spatial.push(i),
            PredictionType::Temporal => splits.temporal.push(i),
            PredictionType::SpatioTemporal => splits.spatio_temporal.push(i),
        }
    }

    let target = (dataset.len() as f64 * AVAIL_FRACTION).round() as usize;
    let coverage = n_seen_b.max(n_seen_t);
    if target < coverage {
        return Err(Error::invalid(format!(
            "available set of {target} points cannot cover {n_seen_b} seen buildings and {n_seen_t} seen time stamps"
        )));
    }
    if target >= in_sample.len() {
        return Err(Error::invalid(format!(
            "available set of {target} points leaves no validation data in an in-sample pool of {}",
            in_sample.len()
        )));
    }

    // Pair seen buildings and times cyclically so every one of them occurs in
    // the available set, then fill up at random.
    let index_of: BTreeMap<(u32, TimePoint), usize> = in_sample
        .iter()
        .map(|&i| ((dataset.points[i].building_id, dataset.points[i].time), i))
        .collect();
    let mut chosen = BTreeSet::new();
    for k in 0..coverage {
        let key = (seen_b[k % n_seen_b], seen_t[k % n_seen_t]);
        let &i = index_of
            .get(&key)
            .ok_or_else(|| Error::invalid("dataset is not a full building x time grid over the seen subsets"))?;
        chosen.insert(i);
    }
    let mut rest: Vec<usize> = in_sample.iter().copied().filter(|i| !chosen.contains(i)).collect();
    rest.shuffle(&mut rng);
    let fill = target - chosen.len();
    chosen.extend(rest.drain(..fill));
    splits.avail = chosen.into_iter().collect();
    rest.sort_unstable();
    splits.val = rest;

    for kind in PredictionType::CANDIDATES {
        if splits.partition(kind).is_empty() {
            return Err(Error::invalid(format!("{} partition is empty", kind.name())));
        }
    }
    Ok(splits)
}
