//! k-nearest-neighbor CTU classifier over standardized block features.

use super::features::{BlockFeatures, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::image::Label;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub features: BlockFeatures,
    pub label: Label,
    pub quality: u8,
}

/// Z-score parameters. Degenerate dimensions get a scale of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl FeatureScale {
    pub fn fit(samples: &[TrainingSample]) -> Self {
        let n = samples.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.features.to_array()) {
                *m += v / n;
            }
        }
        let mut std = [0.0; FEATURE_COUNT];
        for s in samples {
            for ((sd, v), m) in std.iter_mut().zip(s.features.to_array()).zip(mean) {
                *sd += (v - m) * (v - m) / n;
            }
        }
        for sd in &mut std {
            *sd = sd.sqrt();
            if !(*sd > 1e-12) {
                *sd = 1.0;
            }
        }
        FeatureScale { mean, std }
    }

    pub fn apply(&self, f: &BlockFeatures) -> [f64; FEATURE_COUNT] {
        let mut v = f.to_array();
        for i in 0..FEATURE_COUNT {
            v[i] = (v[i] - self.mean[i]) / self.std[i];
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    quality: u8,
    scale: FeatureScale,
    samples: Vec<TrainingSample>,
    points: Vec<[f64; FEATURE_COUNT]>,
}

impl KnnModel {
    pub(crate) fn from_parts(
        k: usize,
        quality: u8,
        scale: FeatureScale,
        samples: Vec<TrainingSample>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Model("k must be at least 1".into()));
        }
        if samples.len() < k {
            return Err(Error::Model(format!("{} samples for k = {k}", samples.len())));
        }
        if scale.std.iter().any(|&s| !(s > 0.0) || !s.is_finite())
            || scale.mean.iter().any(|m| !m.is_finite())
            || samples.iter().any(|s| !s.features.is_finite())
        {
            return Err(Error::Model("non-finite or degenerate model parameters".into()));
        }
        let points = samples.iter().map(|s| scale.apply(&s.features)).collect();
        Ok(KnnModel { k, quality, scale, samples, points })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn quality(&self) -> u8 {
        self.quality
    }

    pub fn scale(&self) -> &FeatureScale {
        &self.scale
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }
}

/// Fits the standardization and stores the samples. All samples must
/// share one quality level.
pub fn knn_train(samples: &[TrainingSample], k: usize) -> Result<KnnModel> {
    let first = samples.first().ok_or_else(|| Error::Model("empty training set".into()))?;
    if samples.iter().any(|s| s.quality != first.quality) {
        return Err(Error::Model("training samples mix quality levels".into()));
    }
    if samples.iter().any(|s| !s.features.is_finite()) {
        return Err(Error::InvalidInput("non-finite training feature".into()));
    }
    KnnModel::from_parts(k, first.quality, FeatureScale::fit(samples), samples.to_vec())
}

/// Majority vote of the `k` nearest samples; neighbors at equal distance
/// are taken in sample order, and a split vote goes to BASE.
pub fn knn_classify(model: &KnnModel, f: &BlockFeatures) -> Result<Label> {
    if !f.is_finite() {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let q = model.scale.apply(f);
    let mut dist: Vec<(f64, usize)> = model
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    let k = model.k.min(dist.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
    }
    let scf = dist[..k].iter().filter(|(_, i)| model.samples[*i].label == Label::Scf).count();
    Ok(if 2 * scf > k { Label::Scf } else { Label::Base })
}

/// Mean accuracy over `folds` folds, sample `i` belonging to fold `i % folds`.
pub fn cross_validate(samples: &[TrainingSample], k: usize, folds: usize) -> Result<f64> {
    if folds < 2 || samples.len() < folds {
        return Err(Error::Model(format!(
            "{} samples are too few for {folds}-fold cross-validation",
            samples.len()
        )));
    }
    let mut sum = 0.0;
    for fold in 0..folds {
        let train: Vec<TrainingSample> =
            samples.iter().enumerate().filter(|(i, _)| i % folds != fold).map(|(_, s)| *s).collect();
        let model = knn_train(&train, k.min(train.len()))?;
        let mut correct = 0usize;
        let mut total = 0usize;
        for s in samples.iter().skip(fold).step_by(folds) {
            total += 1;
            if knn_classify(&model, &s.features)? == s.label {
                correct += 1;
            }
        }
        sum += correct as f64 / total as f64;
    }
    Ok(sum / folds as f64)
}

/// Accuracy of always predicting the most frequent label.
pub fn majority_baseline(samples: &[TrainingSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let scf = samples.iter().filter(|s| s.label == Label::Scf).count();
    scf.max(samples.len() - scf) as f64 / samples.len() as f64
}
