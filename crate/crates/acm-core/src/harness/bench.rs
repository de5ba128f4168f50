//! Latency/scaling benchmark: search cost of the graph index versus
//! the linear scan as the corpus grows.
//!
//! Sizes are processed in ascending order over one incrementally grown
//! index, which is identical to a fresh build at each size because the
//! level RNG consumes one draw per insert either way.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::report::percentile;
use crate::ann::{BruteForceIndex, HnswIndex, HnswParams};
use crate::error::{Error, Result};
use crate::types::{l2_normalize, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Corpus sizes to measure, ascending.
    pub sizes: Vec<usize>,
    pub dim: usize,
    /// Queries per size.
    pub trials: usize,
    /// Neighbors requested per query.
    pub k: usize,
    pub params: HnswParams,
    /// Also time the exact scan at each size.
    pub include_brute: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![10_000, 100_000, 1_000_000],
            dim: 64,
            trials: 200,
            k: 10,
            // construction sized for million-point builds
            params: HnswParams::with_m(16, 100, 100),
            include_brute: true,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("bench needs at least one size".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("bench sizes must be strictly ascending".into()));
        }
        if self.dim == 0 || self.trials == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("dim, trials, and k must be positive".into()));
        }
        self.params.validate()
    }
}

/// Measured latencies at one corpus size, nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    /// Wall time to grow the index to this size, cumulative.
    pub build_ms: f64,
    pub hnsw_median_ns: u64,
    pub hnsw_p99_ns: u64,
    pub brute_median_ns: Option<u64>,
    pub brute_p99_ns: Option<u64>,
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    loop {
        let raw: Vec<f32> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(v) = l2_normalize(&FeatureVector::from_raw(raw)) {
            return v;
        }
    }
}

/// Grow an index through `sizes` and report per-query search latency.
pub fn bench_index(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut query_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let queries: Vec<FeatureVector> = (0..config.trials)
        .map(|_| unit_vector(&mut query_rng, config.dim))
        .collect();

    let mut index = HnswIndex::new(config.dim, config.params.clone())?;
    let mut brute = config.include_brute.then(|| BruteForceIndex::new(config.dim));

    let mut rows = Vec::with_capacity(config.sizes.len());
    let mut build_ms = 0.0f64;
    for &n in &config.sizes {
        let grow = Instant::now();
        while index.len() < n {
            let v = unit_vector(&mut data_rng, config.dim);
            index.insert(&v, 0)?;
            if let Some(b) = brute.as_mut() {
                b.insert(&v, 0)?;
            }
        }
        build_ms += grow.elapsed().as_secs_f64() * 1e3;

        let mut hnsw_ns: Vec<u64> = Vec::with_capacity(config.trials);
        for q in &queries {
            let t = Instant::now();
            let hits = index.search(q, config.k, config.params.ef_search)?;
            hnsw_ns.push(t.elapsed().as_nanos() as u64);
            debug_assert_eq!(hits.len(), config.k.min(n));
        }
        hnsw_ns.sort_unstable();

        let (brute_median_ns, brute_p99_ns) = if let Some(b) = brute.as_ref() {
            let mut ns: Vec<u64> = Vec::with_capacity(config.trials);
            for q in &queries {
                let t = Instant::now();
                let hits = b.search(q, config.k)?;
                ns.push(t.elapsed().as_nanos() as u64);
                debug_assert_eq!(hits.len(), config.k.min(n));
            }
            ns.sort_unstable();
            (percentile(&ns, 0.5), percentile(&ns, 0.99))
        } else {
            (None, None)
        };

        rows.push(BenchRow {
            n,
            build_ms,
            hnsw_median_ns: percentile(&hnsw_ns, 0.5).expect("trials > 0"),
            hnsw_p99_ns: percentile(&hnsw_ns, 0.99).expect("trials > 0"),
            brute_median_ns,
            brute_p99_ns,
        });
    }
    Ok(rows)
}

/// Machine-readable table for plotting.
pub fn write_bench_csv(w: &mut impl Write, rows: &[BenchRow]) -> Result<()> {
    writeln!(
        w,
        "n,build_ms,hnsw_median_ns,hnsw_p99_ns,brute_median_ns,brute_p99_ns"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.3},{},{},{},{}",
            r.n,
            r.build_ms,
            r.hnsw_median_ns,
            r.hnsw_p99_ns,
            r.brute_median_ns.map_or(String::new(), |v| v.to_string()),
            r.brute_p99_ns.map_or(String::new(), |v| v.to_string()),
        )?;
    }
    Ok(())
}
