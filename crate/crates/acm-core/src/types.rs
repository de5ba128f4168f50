//! Shared domain types and the vector math every other module builds on.
//!
//! All values here are immutable once constructed and freely shareable
//! between threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this are treated as zero and cannot be normalized.
pub const ZERO_NORM_FLOOR: f64 = 1e-12;

/// A fixed-dimension real feature vector.
///
/// Entries are stored in 32-bit floats; constructors reject non-finite
/// values so downstream code never has to re-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f32>,
}

impl FeatureVector {
    /// Build a feature vector, rejecting NaN/Inf entries and empty input.
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    /// Build without the finiteness scan. Callers must guarantee finiteness.
    pub(crate) fn from_raw(values: Vec<f32>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Euclidean norm, accumulated in f64.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}

/// One timestamped labeled sample of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    /// Unique non-negative id within a dataset.
    pub id: u64,
    /// Seconds since epoch; ties are broken by `id` when ordering.
    pub timestamp: i64,
    /// Non-negative class id.
    pub label: u32,
    pub feature: FeatureVector,
}

/// A single retrieval result: which stored entry, its label, how far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborHit {
    pub entry_id: usize,
    pub label: u32,
    /// Non-negative distance under the shared cosine metric.
    pub distance: f32,
}

/// A prediction, or abstention when the model has nothing to say.
///
/// Abstaining is a value, not an error; metrics count it as incorrect.
pub type Prediction = Option<u32>;

/// What happened at one online step: the guess, the truth, and how long
/// the predict and learn halves took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    pub timestep: u64,
    pub predicted: Prediction,
    pub truth: u32,
    pub correct: bool,
    pub predict_ns: u64,
    pub learn_ns: u64,
}

impl PredictionOutcome {
    pub fn new(timestep: u64, predicted: Prediction, truth: u32) -> Self {
        Self {
            timestep,
            predicted,
            truth,
            correct: predicted == Some(truth),
            predict_ns: 0,
            learn_ns: 0,
        }
    }
}

/// Dot product with fixed 8-lane reassociation.
///
/// The lane split vectorizes without fast-math and, being a fixed
/// reduction order, keeps distances bit-reproducible across runs.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f32; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let off = i * 8;
        for j in 0..8 {
            lanes[j] = a[off + j].mul_add(b[off + j], lanes[j]);
        }
    }
    let mut tail = 0.0f32;
    for i in chunks * 8..a.len() {
        tail = a[i].mul_add(b[i], tail);
    }
    lanes.iter().sum::<f32>() + tail
}

/// Scale `v` to unit Euclidean norm, preserving direction.
pub fn l2_normalize(v: &FeatureVector) -> Result<FeatureVector> {
    let norm = v.norm();
    if norm < ZERO_NORM_FLOOR {
        return Err(Error::ZeroVector);
    }
    let inv = (1.0 / norm) as f32;
    Ok(FeatureVector::from_raw(
        v.values().iter().map(|&x| x * inv).collect(),
    ))
}

/// Cosine distance `1 - <u, v>` between unit vectors, clamped to [0, 2]
/// so float error never produces a negative distance.
pub fn cosine_distance(u: &FeatureVector, v: &FeatureVector) -> Result<f32> {
    if u.dim() != v.dim() {
        return Err(Error::DimMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok((1.0 - dot(u.values(), v.values())).clamp(0.0, 2.0))
}
