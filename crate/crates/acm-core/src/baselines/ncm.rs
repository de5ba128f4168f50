//! Nearest class mean: one running mean feature per class, cosine
//! similarity against the normalized mean at prediction time.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::types::{FeatureVector, Prediction};

#[derive(Debug, Clone, Default)]
struct ClassMean {
    sum: Vec<f64>,
    count: u64,
}

#[derive(Debug, Clone)]
pub struct NcmClassifier {
    dim: usize,
    classes: BTreeMap<u32, ClassMean>,
}

impl NcmClassifier {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            classes: BTreeMap::new(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Running mean of class `label`, if seen.
    pub fn class_mean(&self, label: u32) -> Option<Vec<f64>> {
        self.classes.get(&label).map(|c| {
            let n = c.count as f64;
            c.sum.iter().map(|&s| s / n).collect()
        })
    }

    pub fn update(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        if feature.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        let entry = self.classes.entry(label).or_insert_with(|| ClassMean {
            sum: vec![0.0; self.dim],
            count: 0,
        });
        for (s, &v) in entry.sum.iter_mut().zip(feature.values()) {
            *s += f64::from(v);
        }
        entry.count += 1;
        Ok(())
    }

    /// Argmax over classes of cosine similarity between the query and
    /// the normalized class mean. Classes whose mean has collapsed to
    /// zero norm are skipped.
    pub fn classify(&self, feature: &FeatureVector) -> Result<Prediction> {
        if feature.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        let mut best: Option<(f64, u32)> = None;
        for (&label, class) in &self.classes {
            let n = class.count as f64;
            let norm: f64 = class
                .sum
                .iter()
                .map(|&s| (s / n).powi(2))
                .sum::<f64>()
                .sqrt();
            if norm < 1e-12 {
                continue;
            }
            let sim: f64 = class
                .sum
                .iter()
                .zip(feature.values())
                .map(|(&s, &v)| (s / n) * f64::from(v))
                .sum::<f64>()
                / norm;
            // strictly-greater keeps the lowest class id on ties
            if best.map_or(true, |(b, _)| sim > b) {
                best = Some((sim, label));
            }
        }
        Ok(best.map(|(_, label)| label))
    }
}

impl OnlineLearner for NcmClassifier {
    fn predict(&self, feature: &FeatureVector) -> Prediction {
        self.classify(feature).unwrap_or(None)
    }

    fn learn(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.update(feature, label)
    }

    fn memory_count(&self) -> usize {
        self.classes.len()
    }
}
