//! Shared helpers for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use acm_core::types::{l2_normalize, FeatureVector};

/// Seeded random points on the unit sphere.
pub fn random_unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let raw: Vec<f32> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            l2_normalize(&FeatureVector::new(raw).expect("finite")).expect("nonzero")
        })
        .collect()
}
