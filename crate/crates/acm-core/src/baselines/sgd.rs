//! One-sample stochastic gradient linear classifiers: multinomial
//! logistic loss or one-vs-all hinge loss, constant learning rate,
//! class rows created on first occurrence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::types::{FeatureVector, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgdLoss {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone)]
struct Row {
    w: Vec<f64>,
    b: f64,
}

#[derive(Debug, Clone)]
pub struct SgdClassifier {
    dim: usize,
    learning_rate: f64,
    loss: SgdLoss,
    rows: BTreeMap<u32, Row>,
}

impl SgdClassifier {
    pub fn new(dim: usize, loss: SgdLoss, learning_rate: f64) -> Result<Self> {
        if learning_rate <= 0.0 || !learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(Self {
            dim,
            learning_rate,
            loss,
            rows: BTreeMap::new(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.rows.len()
    }

    fn check_dim(&self, feature: &FeatureVector) -> Result<()> {
        if feature.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        Ok(())
    }

    fn score(row: &Row, z: &[f32]) -> f64 {
        row.w
            .iter()
            .zip(z)
            .map(|(&w, &v)| w * f64::from(v))
            .sum::<f64>()
            + row.b
    }

    pub fn classify(&self, feature: &FeatureVector) -> Result<Prediction> {
        self.check_dim(feature)?;
        let mut best: Option<(f64, u32)> = None;
        for (&label, row) in &self.rows {
            let s = Self::score(row, feature.values());
            if best.map_or(true, |(b, _)| s > b) {
                best = Some((s, label));
            }
        }
        Ok(best.map(|(_, label)| label))
    }

    /// One stochastic step on (z, y).
    pub fn update(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.check_dim(feature)?;
        let dim = self.dim;
        self.rows.entry(label).or_insert_with(|| Row {
            w: vec![0.0; dim],
            b: 0.0,
        });
        let z = feature.values();
        let lr = self.learning_rate;
        match self.loss {
            SgdLoss::Logistic => {
                // multinomial cross-entropy over the classes seen so far
                let scores: Vec<(u32, f64)> = self
                    .rows
                    .iter()
                    .map(|(&l, row)| (l, Self::score(row, z)))
                    .collect();
                let max = scores
                    .iter()
                    .map(|&(_, s)| s)
                    .fold(f64::NEG_INFINITY, f64::max);
                let norm: f64 = scores.iter().map(|&(_, s)| (s - max).exp()).sum();
                for (l, s) in scores {
                    let p = (s - max).exp() / norm;
                    let g = p - if l == label { 1.0 } else { 0.0 };
                    let row = self.rows.get_mut(&l).expect("scored rows exist");
                    for (w, &v) in row.w.iter_mut().zip(z) {
                        *w -= lr * g * f64::from(v);
                    }
                    row.b -= lr * g;
                }
            }
            SgdLoss::Hinge => {
                // one-vs-all margin: step only on violating classes
                for (&l, row) in self.rows.iter_mut() {
                    let target = if l == label { 1.0 } else { -1.0 };
                    let margin = target * Self::score(row, z);
                    if margin < 1.0 {
                        for (w, &v) in row.w.iter_mut().zip(z) {
                            *w += lr * target * f64::from(v);
                        }
                        row.b += lr * target;
                    }
                }
            }
        }
        Ok(())
    }
}

impl OnlineLearner for SgdClassifier {
    fn predict(&self, feature: &FeatureVector) -> Prediction {
        self.classify(feature).unwrap_or(None)
    }

    fn learn(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.update(feature, label)
    }

    fn memory_count(&self) -> usize {
        self.rows.len()
    }
}
