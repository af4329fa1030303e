use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Per-dimension affine standardization of features and labels, fitted on the
/// initially available points only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub label_mean: Vec<f64>,
    pub label_std: Vec<f64>,
}

fn moments<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let n = rows.clone().count() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows.clone() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut flat = 0;
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                flat += 1;
                1.0
            }
        })
        .collect();
    (mean, std, flat)
}

impl Normalizer {
    pub fn fit(dataset: &Dataset, fit_ids: &[usize]) -> Result<Self> {
        if fit_ids.is_empty() {
            return Err(Error::invalid("cannot fit normalization on an empty set"));
        }
        let pts = || fit_ids.iter().map(|&i| &dataset.points[i]);
        let (feature_mean, feature_std, flat_x) =
            moments(pts().map(|p| p.features.as_slice()), dataset.schema.d_x());
        let (label_mean, label_std, flat_y) = moments(pts().map(|p| p.label.as_slice()), dataset.schema.d_y);
        if flat_x + flat_y > 0 {
            log::info!(
                "{flat_x} feature and {flat_y} label dimensions have zero variance; passed through at unit scale"
            );
        }
        Ok(Normalizer {
            feature_mean,
            feature_std,
            label_mean,
            label_std,
        })
    }

    pub fn transform_features(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.feature_mean).zip(&self.feature_std) {
            *v = (*v - m) / s;
        }
    }

    pub fn transform_label(&self, y: &mut [f64]) {
        for ((v, m), s) in y.iter_mut().zip(&self.label_mean).zip(&self.label_std) {
            *v = (*v - m) / s;
        }
    }

    pub fn inverse_label(&self, y: &mut [f64]) {
        for ((v, m), s) in y.iter_mut().zip(&self.label_mean).zip(&self.label_std) {
            *v = *v * s + m;
        }
    }

    pub fn inverse_features(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.feature_mean).zip(&self.feature_std) {
            *v = *v * s + m;
        }
    }

    /// Returns a copy of `dataset` with every point standardized.
    pub fn apply(&self, dataset: &Dataset) -> Dataset {
        let mut out = dataset.clone();
        for p in &mut out.points {
            self.transform_features(&mut p.features);
            self.transform_label(&mut p.label);
        }
        out
    }
}
