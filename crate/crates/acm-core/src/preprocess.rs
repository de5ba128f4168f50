//! Online feature standardization and dimensionality-reducing projection.
//!
//! Every learner sees features through the same fixed pipeline:
//! project, then standardize with the online scaler, then L2-normalize.
//! Normalizing last guarantees the unit-norm precondition of retrieval.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{dot, l2_normalize, FeatureVector, ZERO_NORM_FLOOR};

/// Streaming per-dimension mean and variance (Welford's update).
///
/// Means and squared-deviation sums accumulate in f64; variance is the
/// population variance m2/count with an epsilon floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    eps: f64,
}

impl RunningMoments {
    pub fn new(dim: usize) -> Self {
        Self::with_eps(dim, 1e-8)
    }

    pub fn with_eps(dim: usize, eps: f64) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            eps,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population variance per dimension.
    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![0.0; self.dim()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|&s| (s / n).max(0.0)).collect()
    }

    /// Fold one sample into the running moments.
    pub fn update(&mut self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        self.count += 1;
        let n = self.count as f64;
        for (i, &v) in x.values().iter().enumerate() {
            let v = f64::from(v);
            let delta = v - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (v - self.mean[i]);
        }
        Ok(())
    }

    /// Standardize: `(x - mean) / sqrt(variance + eps)` elementwise.
    pub fn transform(&self, x: &FeatureVector) -> Result<FeatureVector> {
        if self.count == 0 {
            return Err(Error::NotFitted);
        }
        if x.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let n = self.count as f64;
        let out: Vec<f32> = x
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let var = (self.m2[i] / n).max(0.0);
                ((f64::from(v) - self.mean[i]) / (var + self.eps).sqrt()) as f32
            })
            .collect();
        Ok(FeatureVector::from_raw(out))
    }
}

/// Which map a [`ProjectionWeights`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Single affine layer.
    Affine,
    /// Two affine layers with a rectifier between them.
    Mlp2,
    /// Seeded Gaussian matrix scaled by 1/sqrt(out_dim), no bias.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
struct AffineLayer {
    rows: usize,
    cols: usize,
    /// Row-major rows x cols.
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl AffineLayer {
    fn apply(&self, x: &[f32], out: &mut Vec<f32>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            out.push(dot(row, x) + self.bias[r]);
        }
    }
}

/// Inference-only projection weights. Training them is someone else's
/// job; batch-norm, if any, must be folded into the affine weights by
/// the exporter.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    kind: ProjectionKind,
    in_dim: usize,
    out_dim: usize,
    layers: Vec<AffineLayer>,
}

impl ProjectionWeights {
    pub fn affine(in_dim: usize, out_dim: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::InvalidConfig("affine weight shapes do not match dims".into()));
        }
        Ok(Self {
            kind: ProjectionKind::Affine,
            in_dim,
            out_dim,
            layers: vec![AffineLayer { rows: out_dim, cols: in_dim, weights, bias }],
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn mlp2(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        w1: Vec<f32>,
        b1: Vec<f32>,
        w2: Vec<f32>,
        b2: Vec<f32>,
    ) -> Result<Self> {
        if w1.len() != in_dim * hidden_dim || b1.len() != hidden_dim {
            return Err(Error::InvalidConfig("mlp2 layer-1 shapes do not match dims".into()));
        }
        if w2.len() != hidden_dim * out_dim || b2.len() != out_dim {
            return Err(Error::InvalidConfig("mlp2 layer-2 shapes do not match dims".into()));
        }
        Ok(Self {
            kind: ProjectionKind::Mlp2,
            in_dim,
            out_dim,
            layers: vec![
                AffineLayer { rows: hidden_dim, cols: in_dim, weights: w1, bias: b1 },
                AffineLayer { rows: out_dim, cols: hidden_dim, weights: w2, bias: b2 },
            ],
        })
    }

    /// Seeded Gaussian projection with entries N(0,1)/sqrt(out_dim),
    /// which preserves inner products in expectation.
    pub fn random(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (out_dim as f64).sqrt();
        let weights: Vec<f32> = (0..in_dim * out_dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                (g * scale) as f32
            })
            .collect();
        Self {
            kind: ProjectionKind::Random,
            in_dim,
            out_dim,
            layers: vec![AffineLayer {
                rows: out_dim,
                cols: in_dim,
                weights,
                bias: vec![0.0; out_dim],
            }],
        }
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Apply the stored map.
    pub fn project(&self, x: &FeatureVector) -> Result<FeatureVector> {
        if x.dim() != self.in_dim {
            return Err(Error::DimMismatch {
                expected: self.in_dim,
                got: x.dim(),
            });
        }
        let mut cur = x.values().to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if self.kind == ProjectionKind::Mlp2 && i == 0 {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(FeatureVector::from_raw(cur))
    }
}

// ---------------------------------------------------------------------------
// Weights file: magic "ACMW1\0", kind tag, dims, row-major f32 matrices
// followed by bias vectors, one layer at a time, all little-endian.
// ---------------------------------------------------------------------------

pub const WEIGHTS_MAGIC: &[u8; 6] = b"ACMW1\0";

fn weights_eof() -> Error {
    Error::TruncatedFile("weights file ended early".into())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| weights_eof())?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32_vec(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|_| weights_eof())?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect())
}

impl ProjectionWeights {
    pub fn save_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(WEIGHTS_MAGIC)?;
        let tag: u8 = match self.kind {
            ProjectionKind::Affine => 0,
            ProjectionKind::Mlp2 => 1,
            ProjectionKind::Random => 2,
        };
        w.write_all(&[tag])?;
        w.write_all(&(self.in_dim as u32).to_le_bytes())?;
        w.write_all(&(self.out_dim as u32).to_le_bytes())?;
        if self.kind == ProjectionKind::Mlp2 {
            w.write_all(&(self.layers[0].rows as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for &v in &layer.weights {
                w.write_all(&v.to_le_bytes())?;
            }
            for &v in &layer.bias {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(|_| weights_eof())?;
        if &magic != WEIGHTS_MAGIC {
            return Err(Error::BadMagic { expected: "ACMW1" });
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| weights_eof())?;
        let in_dim = read_u32(r)? as usize;
        let out_dim = read_u32(r)? as usize;
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidConfig("weights file has zero dims".into()));
        }
        let loaded = match tag[0] {
            0 | 2 => {
                let weights = read_f32_vec(r, in_dim * out_dim)?;
                let bias = read_f32_vec(r, out_dim)?;
                let mut p = Self::affine(in_dim, out_dim, weights, bias)?;
                if tag[0] == 2 {
                    p.kind = ProjectionKind::Random;
                }
                p
            }
            1 => {
                let hidden = read_u32(r)? as usize;
                if hidden == 0 {
                    return Err(Error::InvalidConfig("weights file has zero hidden dim".into()));
                }
                let w1 = read_f32_vec(r, in_dim * hidden)?;
                let b1 = read_f32_vec(r, hidden)?;
                let w2 = read_f32_vec(r, hidden * out_dim)?;
                let b2 = read_f32_vec(r, out_dim)?;
                Self::mlp2(in_dim, hidden, out_dim, w1, b1, w2, b2)?
            }
            t => {
                return Err(Error::InvalidConfig(format!("unknown projection kind tag {t}")));
            }
        };
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::TruncatedFile("trailing bytes in weights file".into()));
        }
        Ok(loaded)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::load_from(&mut r)
    }
}

/// The fixed feature pipeline: project -> standardize -> L2-normalize.
///
/// The scaler updates before transforming: the incoming sample's raw
/// feature is available ahead of prediction, so folding it in first
/// keeps the scaler warm from the very first record. A standardized
/// vector that is exactly zero (count=1, or a constant stream) carries
/// no direction, so it maps to the fixed uniform unit vector instead of
/// failing.
#[derive(Debug, Clone)]
pub struct Pipeline {
    projection: Option<ProjectionWeights>,
    scaler: Option<RunningMoments>,
    out_dim: usize,
}

impl Pipeline {
    pub fn new(projection: Option<ProjectionWeights>, use_scaler: bool, raw_dim: usize) -> Result<Self> {
        if let Some(p) = &projection {
            if p.in_dim() != raw_dim {
                return Err(Error::DimMismatch {
                    expected: p.in_dim(),
                    got: raw_dim,
                });
            }
        }
        let out_dim = projection.as_ref().map_or(raw_dim, |p| p.out_dim());
        Ok(Self {
            projection,
            scaler: use_scaler.then(|| RunningMoments::new(out_dim)),
            out_dim,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.out_dim
    }

    pub fn scaler(&self) -> Option<&RunningMoments> {
        self.scaler.as_ref()
    }

    fn projected(&self, raw: &FeatureVector) -> Result<FeatureVector> {
        match &self.projection {
            Some(p) => p.project(raw),
            None => Ok(raw.clone()),
        }
    }

    fn finish(&self, v: FeatureVector) -> FeatureVector {
        if v.norm() < ZERO_NORM_FLOOR {
            let u = (1.0 / (self.out_dim as f64).sqrt()) as f32;
            return FeatureVector::from_raw(vec![u; self.out_dim]);
        }
        l2_normalize(&v).expect("norm checked above")
    }

    /// Fold a sample into the scaler without producing output
    /// (the pretrain fitting pass).
    pub fn fit(&mut self, raw: &FeatureVector) -> Result<()> {
        let projected = self.projected(raw)?;
        if let Some(s) = &mut self.scaler {
            s.update(&projected)?;
        }
        Ok(())
    }

    /// Process one stream sample: update the scaler, then transform.
    pub fn ingest(&mut self, raw: &FeatureVector) -> Result<FeatureVector> {
        let projected = self.projected(raw)?;
        let scaled = match &mut self.scaler {
            Some(s) => {
                s.update(&projected)?;
                s.transform(&projected)?
            }
            None => projected,
        };
        Ok(self.finish(scaled))
    }

    /// Transform without updating (frozen evaluation).
    pub fn transform_frozen(&self, raw: &FeatureVector) -> Result<FeatureVector> {
        let projected = self.projected(raw)?;
        let scaled = match &self.scaler {
            Some(s) => s.transform(&projected)?,
            None => projected,
        };
        Ok(self.finish(scaled))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fv(values: &[f32]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                FeatureVector::new((0..dim).map(|_| rng.random_range(-3.0f32..3.0)).collect())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn first_update_sets_mean() {
        let mut s = RunningMoments::new(3);
        s.update(&fv(&[1.0, -2.0, 0.5])).unwrap();
        assert_eq!(s.mean(), &[1.0, -2.0, 0.5]);
        assert_eq!(s.variance(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn two_point_moments() {
        let mut s = RunningMoments::new(1);
        s.update(&fv(&[0.0])).unwrap();
        s.update(&fv(&[2.0])).unwrap();
        assert!((s.mean()[0] - 1.0).abs() < 1e-12);
        assert!((s.variance()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn streaming_matches_two_pass_batch() {
        let data = random_vectors(10_000, 8, 42);
        let mut s = RunningMoments::new(8);
        for x in &data {
            s.update(x).unwrap();
        }
        // independent two-pass computation
        let n = data.len() as f64;
        for d in 0..8 {
            let mean: f64 = data.iter().map(|x| f64::from(x.values()[d])).sum::<f64>() / n;
            let var: f64 = data
                .iter()
                .map(|x| (f64::from(x.values()[d]) - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!((s.mean()[d] - mean).abs() / mean.abs().max(1e-9) < 1e-6);
            assert!((s.variance()[d] - var).abs() / var.abs().max(1e-9) < 1e-6);
        }
    }

    #[test]
    fn mean_is_order_insensitive() {
        let data = random_vectors(500, 4, 7);
        let mut forward = RunningMoments::new(4);
        for x in &data {
            forward.update(x).unwrap();
        }
        let mut backward = RunningMoments::new(4);
        for x in data.iter().rev() {
            backward.update(x).unwrap();
        }
        for d in 0..4 {
            let rel = (forward.mean()[d] - backward.mean()[d]).abs()
                / forward.mean()[d].abs().max(1e-9);
            assert!(rel < 1e-9, "dim {d} relative mean drift {rel}");
        }
    }

    #[test]
    fn transform_of_mean_is_zero() {
        let mut s = RunningMoments::new(2);
        s.update(&fv(&[1.0, 2.0])).unwrap();
        s.update(&fv(&[3.0, 6.0])).unwrap();
        let out = s.transform(&fv(&[2.0, 4.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0]);
    }

    #[test]
    fn transform_single_sample_is_zero() {
        let mut s = RunningMoments::new(2);
        s.update(&fv(&[5.0, -1.0])).unwrap();
        let out = s.transform(&fv(&[5.0, -1.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0]);
    }

    #[test]
    fn transform_unfitted_errors() {
        let s = RunningMoments::new(2);
        assert!(matches!(s.transform(&fv(&[0.0, 0.0])), Err(Error::NotFitted)));
    }

    #[test]
    fn transformed_batch_is_standardized() {
        let data = random_vectors(10_000, 4, 9);
        let mut s = RunningMoments::new(4);
        for x in &data {
            s.update(x).unwrap();
        }
        let transformed: Vec<FeatureVector> =
            data.iter().map(|x| s.transform(x).unwrap()).collect();
        let n = transformed.len() as f64;
        for d in 0..4 {
            let mean: f64 = transformed.iter().map(|x| f64::from(x.values()[d])).sum::<f64>() / n;
            let var: f64 = transformed
                .iter()
                .map(|x| (f64::from(x.values()[d]) - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-2, "dim {d} mean {mean}");
            assert!((var - 1.0).abs() < 1e-2, "dim {d} var {var}");
        }
    }

    #[test]
    fn affine_identity_is_identity() {
        let mut w = vec![0.0f32; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let p = ProjectionWeights::affine(3, 3, w, vec![0.0; 3]).unwrap();
        let x = fv(&[0.5, -1.0, 2.0]);
        assert_eq!(p.project(&x).unwrap(), x);
    }

    #[test]
    fn mlp2_zero_second_layer_gives_bias() {
        let p = ProjectionWeights::mlp2(
            2,
            4,
            3,
            vec![0.1; 8],
            vec![0.0; 4],
            vec![0.0; 12],
            vec![1.0, -2.0, 0.25],
        )
        .unwrap();
        let out = p.project(&fv(&[1.0, 1.0])).unwrap();
        assert_eq!(out.values(), &[1.0, -2.0, 0.25]);
    }

    #[test]
    fn mlp2_applies_rectifier() {
        // single hidden unit with negative preactivation is clamped to 0
        let p = ProjectionWeights::mlp2(
            1,
            1,
            1,
            vec![-1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
        )
        .unwrap();
        assert_eq!(p.project(&fv(&[2.0])).unwrap().values(), &[0.0]);
        assert_eq!(p.project(&fv(&[-2.0])).unwrap().values(), &[2.0]);
    }

    #[test]
    fn random_projection_preserves_inner_products() {
        // Empirical distortion at 512 -> 256: the error of <Px,Py>
        // versus <x,y> has std ~ sqrt(2/256) ~ 0.088 for unit vectors.
        let p = ProjectionWeights::random(512, 256, 31);
        let xs = crate::ann::test_util::random_unit_vectors(1_000, 512, 32);
        let ys = crate::ann::test_util::random_unit_vectors(1_000, 512, 33);
        let mut sq_err = 0.0f64;
        for (x, y) in xs.iter().zip(&ys) {
            let exact = f64::from(dot(x.values(), y.values()));
            let px = p.project(x).unwrap();
            let py = p.project(y).unwrap();
            let approx = f64::from(dot(px.values(), py.values()));
            sq_err += (approx - exact).powi(2);
        }
        let rms = (sq_err / 1_000.0).sqrt();
        assert!(rms < 0.1, "rms inner-product distortion {rms}");
    }

    #[test]
    fn projection_is_deterministic_per_seed() {
        let a = ProjectionWeights::random(16, 8, 5);
        let b = ProjectionWeights::random(16, 8, 5);
        let x = &random_vectors(1, 16, 6)[0];
        assert_eq!(a.project(x).unwrap(), b.project(x).unwrap());
    }

    #[test]
    fn weights_file_round_trip_bit_exact() {
        let p = ProjectionWeights::mlp2(
            6,
            5,
            4,
            (0..30).map(|i| i as f32 * 0.1).collect(),
            vec![0.5; 5],
            (0..20).map(|i| -(i as f32) * 0.2).collect(),
            vec![-0.25; 4],
        )
        .unwrap();
        let mut bytes = Vec::new();
        p.save_to(&mut bytes).unwrap();
        let loaded = ProjectionWeights::load_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(p, loaded);
        let mut again = Vec::new();
        loaded.save_to(&mut again).unwrap();
        assert_eq!(bytes, again);

        let r = ProjectionWeights::random(8, 4, 17);
        let mut bytes = Vec::new();
        r.save_to(&mut bytes).unwrap();
        let loaded = ProjectionWeights::load_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded.kind(), ProjectionKind::Random);
        assert_eq!(r, loaded);
    }

    #[test]
    fn weights_file_rejects_bad_magic_and_truncation() {
        let p = ProjectionWeights::random(4, 2, 1);
        let mut bytes = Vec::new();
        p.save_to(&mut bytes).unwrap();

        let mut broken = bytes.clone();
        broken[0] = b'Z';
        assert!(matches!(
            ProjectionWeights::load_from(&mut broken.as_slice()),
            Err(Error::BadMagic { .. })
        ));

        bytes.truncate(bytes.len() - 1);
        assert!(matches!(
            ProjectionWeights::load_from(&mut bytes.as_slice()),
            Err(Error::TruncatedFile(_))
        ));
    }

    #[test]
    fn pipeline_emits_unit_vectors_and_handles_degenerate_input() {
        let mut pipe = Pipeline::new(None, true, 3).unwrap();
        // first-ever sample standardizes to zero and takes the fallback
        let out = pipe.ingest(&fv(&[4.0, 4.0, 4.0])).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-6);
        let u = (1.0f64 / 3.0).sqrt() as f32;
        assert!(out.values().iter().all(|&v| (v - u).abs() < 1e-6));

        let out = pipe.ingest(&fv(&[1.0, 2.0, 3.0])).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pipeline_frozen_transform_does_not_update() {
        let mut pipe = Pipeline::new(None, true, 2).unwrap();
        pipe.fit(&fv(&[1.0, 0.0])).unwrap();
        pipe.fit(&fv(&[3.0, 2.0])).unwrap();
        let before = pipe.scaler().unwrap().count();
        let _ = pipe.transform_frozen(&fv(&[2.0, 2.0])).unwrap();
        assert_eq!(pipe.scaler().unwrap().count(), before);
    }
}
