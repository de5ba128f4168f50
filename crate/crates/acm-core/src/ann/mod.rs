//! Approximate and exact nearest-neighbor indexes over unit vectors.
//!
//! Both index types share one retrieval contract ([`NeighborIndex`]) so
//! the learner can run against either: the HNSW graph for logarithmic
//! cost, the brute-force scan as the exact oracle.

mod brute;
mod hnsw;
mod snapshot;
mod visited;

pub use brute::BruteForceIndex;
pub use hnsw::{HnswIndex, HnswParams, SelectStrategy};

use crate::error::Result;
use crate::types::{FeatureVector, NeighborHit};

/// Retrieval contract shared by the graph index and the exact scan.
///
/// Implementations must return `min(k, len)` hits sorted by ascending
/// distance with insertion-order ids breaking ties, and be deterministic
/// for a fixed (seed, insert sequence, query) triple.
pub trait NeighborIndex: Send + Sync {
    fn len(&self) -> usize;

    fn dim(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Append a vector with its label; returns the new entry id.
    fn insert(&mut self, feature: &FeatureVector, label: u32) -> Result<usize>;

    /// k-nearest retrieval. `ef` bounds the search beam where the
    /// implementation is approximate; exact implementations ignore it.
    fn search(&self, query: &FeatureVector, k: usize, ef: usize) -> Result<Vec<NeighborHit>>;
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use crate::types::l2_normalize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Seeded random points on the unit sphere.
    pub fn random_unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let raw: Vec<f32> = (0..dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                l2_normalize(&FeatureVector::new(raw).expect("finite")).expect("nonzero")
            })
            .collect()
    }

    /// Small-degree parameters for fast test builds.
    pub fn small_params(m: usize) -> HnswParams {
        HnswParams::with_m(m, (4 * m).max(32), (4 * m).max(32))
    }
}
