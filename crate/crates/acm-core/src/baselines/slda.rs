//! Streaming linear discriminant analysis: per-class running means plus
//! one shared streaming covariance with shrinkage toward the identity.
//!
//! The covariance is pooled about the running global mean and updated
//! in a single pass; each per-step rank-one term is accumulated in
//! symmetrized form so the matrix stays exactly symmetric. Inverting
//! the shrunk covariance is deferred to a periodic refresh, so a
//! prediction may use a precision cache up to `refresh_interval`
//! updates stale.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::types::{FeatureVector, Prediction};

#[derive(Debug, Clone)]
struct ClassState {
    sum: DVector<f64>,
    count: u64,
    /// Cached linear score: w = precision * mean, b = -0.5 * mean . w.
    w: DVector<f64>,
    b: f64,
}

#[derive(Debug, Clone)]
pub struct SldaClassifier {
    dim: usize,
    shrinkage: f64,
    refresh_interval: u64,
    count: u64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
    classes: BTreeMap<u32, ClassState>,
    precision: Option<DMatrix<f64>>,
    updates_since_refresh: u64,
}

impl SldaClassifier {
    pub fn new(dim: usize, shrinkage: f64, refresh_interval: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&shrinkage) || shrinkage == 0.0 {
            return Err(Error::InvalidConfig(
                "shrinkage must be in (0, 1] so the shrunk covariance stays invertible".into(),
            ));
        }
        if refresh_interval == 0 {
            return Err(Error::InvalidConfig("refresh interval must be positive".into()));
        }
        Ok(Self {
            dim,
            shrinkage,
            refresh_interval,
            count: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
            classes: BTreeMap::new(),
            precision: None,
            updates_since_refresh: 0,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Population covariance about the running global mean.
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count == 0 {
            return DMatrix::zeros(self.dim, self.dim);
        }
        &self.m2 / self.count as f64
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

    pub fn update(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.check_dim(feature)?;
        let x = DVector::from_iterator(self.dim, feature.values().iter().map(|&v| f64::from(v)));

        self.count += 1;
        let n = self.count as f64;
        let delta = &x - &self.mean;
        self.mean += &delta / n;
        let delta2 = &x - &self.mean;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = 0.5 * (delta[i] * delta2[j] + delta[j] * delta2[i]);
                self.m2[(i, j)] += v;
                if j != i {
                    self.m2[(j, i)] += v;
                }
            }
        }

        let dim = self.dim;
        let entry = self.classes.entry(label).or_insert_with(|| ClassState {
            sum: DVector::zeros(dim),
            count: 0,
            w: DVector::zeros(dim),
            b: 0.0,
        });
        entry.sum += &x;
        entry.count += 1;

        self.updates_since_refresh += 1;
        if self.precision.is_none() || self.updates_since_refresh >= self.refresh_interval {
            self.refresh()?;
        } else {
            // only this class's mean moved; refresh its cached score
            let precision = self.precision.as_ref().expect("cache exists past first update");
            let entry = self.classes.get_mut(&label).expect("just inserted");
            let mu = &entry.sum / entry.count as f64;
            entry.w = precision * &mu;
            entry.b = -0.5 * mu.dot(&entry.w);
        }
        Ok(())
    }

    /// Recompute the precision cache: inverse of (1-λ)Σ + λI.
    /// The shrinkage floor keeps the matrix positive definite, so the
    /// Cholesky factorization cannot fail for λ in (0, 1].
    pub fn refresh(&mut self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::NotFitted);
        }
        let mut shrunk = self.covariance() * (1.0 - self.shrinkage);
        for i in 0..self.dim {
            shrunk[(i, i)] += self.shrinkage;
        }
        let precision = Cholesky::new(shrunk)
            .ok_or_else(|| Error::InvalidConfig("shrunk covariance is not positive definite".into()))?
            .inverse();
        for entry in self.classes.values_mut() {
            let mu = &entry.sum / entry.count as f64;
            entry.w = &precision * &mu;
            entry.b = -0.5 * mu.dot(&entry.w);
        }
        self.precision = Some(precision);
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// Argmax of the affine scores w_c . z + b_c.
    pub fn classify(&self, feature: &FeatureVector) -> Result<Prediction> {
        self.check_dim(feature)?;
        if self.classes.is_empty() {
            return Ok(None);
        }
        let z = DVector::from_iterator(self.dim, feature.values().iter().map(|&v| f64::from(v)));
        let mut best: Option<(f64, u32)> = None;
        for (&label, class) in &self.classes {
            let score = class.w.dot(&z) + class.b;
            if best.map_or(true, |(b, _)| score > b) {
                best = Some((score, label));
            }
        }
        Ok(best.map(|(_, label)| label))
    }
}

impl OnlineLearner for SldaClassifier {
    fn predict(&self, feature: &FeatureVector) -> Prediction {
        self.classify(feature).unwrap_or(None)
    }

    fn learn(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.update(feature, label)
    }

    fn memory_count(&self) -> usize {
        self.classes.len()
    }

    fn freeze(&mut self) {
        if self.count > 0 {
            let _ = self.refresh();
        }
    }
}
