//! Dataset ingestion, chronological splitting, and synthetic
//! non-stationary stream generation.

mod feature_file;

pub use feature_file::{
    manifest_line, parse_manifest, read_feature_bytes, read_feature_file, write_feature_bytes,
    write_feature_file, FeatureDataset, FEATURE_MAGIC,
};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, StreamRecord};

/// How a dataset is carved into pretrain / online / test splits.
///
/// The test split is drawn first as a uniform random sample across all
/// of time; of the remainder, the earliest `pretrain_fraction` by
/// timestamp forms the pretrain split and the rest streams online.
/// Floor rounding applies at each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub pretrain_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            pretrain_fraction: 0.2,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(self.pretrain_fraction) || !ok(self.test_fraction) {
            return Err(Error::InvalidConfig("split fractions must lie in [0, 1)".into()));
        }
        if self.pretrain_fraction + self.test_fraction >= 1.0 {
            return Err(Error::InvalidConfig("split fractions must sum below 1".into()));
        }
        Ok(())
    }
}

/// Sort by (timestamp, id) and partition into (pretrain, online, test).
/// All three splits stay in timestamp order.
pub fn chronological_split(
    records: Vec<StreamRecord>,
    spec: &SplitSpec,
) -> Result<(Vec<StreamRecord>, Vec<StreamRecord>, Vec<StreamRecord>)> {
    spec.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut records = records;
    records.sort_by_key(|r| (r.timestamp, r.id));

    let n = records.len();
    let test_n = (spec.test_fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_test = vec![false; n];
    for idx in sample(&mut rng, n, test_n) {
        is_test[idx] = true;
    }

    let mut test = Vec::with_capacity(test_n);
    let mut rest = Vec::with_capacity(n - test_n);
    for (r, take) in records.into_iter().zip(&is_test) {
        if *take {
            test.push(r);
        } else {
            rest.push(r);
        }
    }

    let pretrain_n = (spec.pretrain_fraction * rest.len() as f64).floor() as usize;
    let online = rest.split_off(pretrain_n);
    Ok((rest, online, test))
}

/// When each class first appears in the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalSchedule {
    /// Class c arrives at step floor(c * samples / num_classes).
    Uniform,
    /// Explicit arrival step per class; must start at 0 and be sorted.
    At(Vec<u64>),
}

/// How the synthetic stream drifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// Classes become active over time per the arrival schedule.
    ClassIncremental,
    /// All classes active; their means rotate slowly in a fixed plane.
    MeanRotation,
}

/// Synthetic drift-stream generator configuration. Samples are drawn
/// around unit-norm cluster centers with Gaussian spread `sigma`; a
/// class may own several sub-clusters (`modes_per_class`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    pub num_classes: usize,
    pub dim: usize,
    pub samples: usize,
    pub mode: DriftMode,
    pub arrival: ArrivalSchedule,
    pub sigma: f64,
    pub modes_per_class: usize,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            dim: 32,
            samples: 10_000,
            mode: DriftMode::ClassIncremental,
            arrival: ArrivalSchedule::Uniform,
            sigma: 0.1,
            modes_per_class: 1,
            seed: 0,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.dim == 0 || self.samples == 0 {
            return Err(Error::InvalidConfig(
                "drift config needs positive classes, dim, and samples".into(),
            ));
        }
        if self.modes_per_class == 0 {
            return Err(Error::InvalidConfig("modes_per_class must be positive".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be finite and non-negative".into()));
        }
        if self.mode == DriftMode::MeanRotation && self.dim < 2 {
            return Err(Error::InvalidConfig("mean rotation needs dim >= 2".into()));
        }
        if let ArrivalSchedule::At(steps) = &self.arrival {
            if steps.len() != self.num_classes {
                return Err(Error::InvalidConfig(
                    "arrival schedule length must equal num_classes".into(),
                ));
            }
            if steps.first() != Some(&0) {
                return Err(Error::InvalidConfig("first class must arrive at step 0".into()));
            }
            if steps.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidConfig("arrival steps must be sorted".into()));
            }
            if steps.iter().any(|&s| s >= self.samples as u64) {
                return Err(Error::InvalidConfig(
                    "arrival steps must lie inside the stream".into(),
                ));
            }
        }
        Ok(())
    }

    fn arrival_step(&self, class: usize) -> u64 {
        match &self.arrival {
            ArrivalSchedule::Uniform => (class * self.samples / self.num_classes) as u64,
            ArrivalSchedule::At(steps) => steps[class],
        }
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Generate a deterministic synthetic drift stream. Timestamps advance
/// by one per record and ids follow record order.
pub fn generate_drift_stream(config: &DriftConfig) -> Result<Vec<StreamRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dim;

    // cluster centers per class per mode
    let centers: Vec<Vec<Vec<f64>>> = (0..config.num_classes)
        .map(|_| (0..config.modes_per_class).map(|_| unit_gaussian(&mut rng, dim)).collect())
        .collect();

    // a fixed orthonormal plane (u, v) for the rotation mode
    let (u, v) = if config.mode == DriftMode::MeanRotation {
        let u = unit_gaussian(&mut rng, dim);
        let mut v = unit_gaussian(&mut rng, dim);
        let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        for (x, &ux) in v.iter_mut().zip(&u) {
            *x -= proj * ux;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        for x in v.iter_mut() {
            *x /= norm;
        }
        (u, v)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut records = Vec::with_capacity(config.samples);
    for t in 0..config.samples {
        let label = match config.mode {
            DriftMode::ClassIncremental => {
                let active = (0..config.num_classes)
                    .filter(|&c| config.arrival_step(c) <= t as u64)
                    .count()
                    .max(1);
                rng.random_range(0..active) as u32
            }
            DriftMode::MeanRotation => rng.random_range(0..config.num_classes) as u32,
        };
        let mode = rng.random_range(0..config.modes_per_class);
        let base = &centers[label as usize][mode];

        let center: Vec<f64> = if config.mode == DriftMode::MeanRotation {
            // rotate the center's in-plane component by one revolution
            // over the whole stream
            let theta = 2.0 * std::f64::consts::PI * t as f64 / config.samples as f64;
            let p: f64 = base.iter().zip(&u).map(|(a, b)| a * b).sum();
            let q: f64 = base.iter().zip(&v).map(|(a, b)| a * b).sum();
            let (rp, rq) = (
                p * theta.cos() - q * theta.sin(),
                p * theta.sin() + q * theta.cos(),
            );
            base.iter()
                .zip(u.iter().zip(&v))
                .map(|(&b, (&ux, &vx))| b - p * ux - q * vx + rp * ux + rq * vx)
                .collect()
        } else {
            base.clone()
        };

        let values: Vec<f32> = center
            .iter()
            .map(|&c| {
                if config.sigma > 0.0 {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    (c + config.sigma * g) as f32
                } else {
                    c as f32
                }
            })
            .collect();
        records.push(StreamRecord {
            id: t as u64,
            timestamp: t as i64,
            label,
            feature: FeatureVector::from_raw(values),
        });
    }
    Ok(records)
}
