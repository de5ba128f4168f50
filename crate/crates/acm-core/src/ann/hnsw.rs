//! Hierarchical navigable small-world graph over unit feature vectors.
//!
//! A multi-layer proximity graph: every node lives on layer 0, and each
//! node is additionally promoted to higher layers with geometrically
//! decaying probability. Queries descend greedily from the top layer,
//! then run a beam search (width `ef`) on layer 0. Insertion reuses the
//! same descent and wires the new node bidirectionally into each of its
//! layers, pruning neighbor lists with the occlusion heuristic.
//!
//! The stream is append-only, so there is no delete path. Duplicate
//! vectors are allowed as distinct nodes. Distances are compared with
//! exact floating-point ordering; insertion-order id breaks ties, which
//! together with the seeded level RNG makes every build and query
//! deterministic for a given insert sequence.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::visited::VisitedPool;
use super::NeighborIndex;
use crate::error::{Error, Result};
use crate::types::{dot, FeatureVector, NeighborHit};

/// Construction and query parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HnswParams {
    /// Max neighbors per node on layers >= 1.
    pub m: usize,
    /// Max neighbors on layer 0 (default 2·m).
    pub m0: usize,
    /// Beam width while inserting.
    pub ef_construction: usize,
    /// Beam width while querying.
    pub ef_search: usize,
    /// Level multiplier mL for the geometric layer draw.
    pub level_multiplier: f64,
    pub rng_seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        let m = 100;
        Self {
            m,
            m0: 2 * m,
            ef_construction: 500,
            ef_search: 500,
            level_multiplier: 1.0 / (m as f64).ln(),
            rng_seed: 0,
        }
    }
}

impl HnswParams {
    /// Sized-down parameters for a given degree bound, keeping the
    /// standard m0 = 2·m and mL = 1/ln(m) relations.
    pub fn with_m(m: usize, ef_construction: usize, ef_search: usize) -> Self {
        Self {
            m,
            m0: 2 * m,
            ef_construction,
            ef_search,
            level_multiplier: 1.0 / (m as f64).ln(),
            rng_seed: 0,
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidConfig("hnsw m must be >= 2".into()));
        }
        if self.ef_construction < self.m {
            return Err(Error::InvalidConfig("ef_construction must be >= m".into()));
        }
        if self.ef_search < 1 {
            return Err(Error::InvalidConfig("ef_search must be >= 1".into()));
        }
        if self.m0 < self.m {
            return Err(Error::InvalidConfig("m0 must be >= m".into()));
        }
        if !self.level_multiplier.is_finite() || self.level_multiplier < 0.0 {
            return Err(Error::InvalidConfig("level multiplier must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Neighbor pruning strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectStrategy {
    /// Keep the closest `m` candidates.
    Simple,
    /// Keep a candidate only if it is closer to the base point than to
    /// every already-kept neighbor (drops occluded directions).
    Heuristic,
}

/// The graph index. Single writer, many concurrent readers.
#[derive(Debug)]
pub struct HnswIndex {
    params: HnswParams,
    dim: usize,
    /// Row-major node vectors, `dim` floats per node.
    vectors: Vec<f32>,
    labels: Vec<u32>,
    /// `links[node][level]` = neighbor ids; a node has lists for
    /// levels `0..=node_level` exactly.
    links: Vec<Vec<Vec<u32>>>,
    entry_point: Option<u32>,
    max_level: usize,
    rng: ChaCha8Rng,
    visited: VisitedPool,
}

impl HnswIndex {
    pub fn new(dim: usize, params: HnswParams) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        Ok(Self {
            params,
            dim,
            vectors: Vec::new(),
            labels: Vec::new(),
            links: Vec::new(),
            entry_point: None,
            max_level: 0,
            rng,
            visited: VisitedPool::new(),
        })
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry_point(&self) -> Option<usize> {
        self.entry_point.map(|id| id as usize)
    }

    pub fn label(&self, id: usize) -> u32 {
        self.labels[id]
    }

    pub fn vector(&self, id: usize) -> &[f32] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    /// Highest layer `id` participates in.
    pub fn node_level(&self, id: usize) -> usize {
        self.links[id].len() - 1
    }

    /// Map a uniform draw in (0, 1] to a layer: floor(-ln(u) · mL).
    pub fn level_from_uniform(u: f64, multiplier: f64) -> usize {
        debug_assert!(u > 0.0 && u <= 1.0);
        if multiplier <= 0.0 {
            return 0;
        }
        (-u.ln() * multiplier).floor() as usize
    }

    /// Draw the layer for the next inserted node.
    pub fn assign_level(&mut self) -> usize {
        // random::<f64>() is [0,1); flip to (0,1] so ln() stays finite.
        let u = 1.0 - self.rng.random::<f64>();
        Self::level_from_uniform(u, self.params.level_multiplier)
    }

    #[inline]
    fn distance_to(&self, query: &[f32], id: u32) -> f32 {
        (1.0 - dot(query, self.vector(id as usize))).clamp(0.0, 2.0)
    }

    #[inline]
    fn distance_between(&self, a: u32, b: u32) -> f32 {
        (1.0 - dot(self.vector(a as usize), self.vector(b as usize))).clamp(0.0, 2.0)
    }

    /// Greedy strictly-improving walk toward `query` on one layer.
    fn greedy_closest(&self, query: &[f32], mut ep: u32, level: usize) -> u32 {
        let mut best = self.distance_to(query, ep);
        loop {
            let mut improved = false;
            for &nb in &self.links[ep as usize][level] {
                let d = self.distance_to(query, nb);
                if d < best {
                    best = d;
                    ep = nb;
                    improved = true;
                }
            }
            if !improved {
                return ep;
            }
        }
    }

    /// Beam search on one layer. Returns up to `ef` hits sorted by
    /// ascending (distance, id).
    fn search_layer(&self, query: &[f32], ep: u32, ef: usize, level: usize) -> Vec<(f32, u32)> {
        let mut visited = self.visited.checkout(self.len());
        visited.test_and_set(ep);

        let d0 = self.distance_to(query, ep);
        // min-heap of frontier candidates, max-heap of current results
        let mut frontier = BinaryHeap::new();
        frontier.push(Reverse((OrderedFloat(d0), ep)));
        let mut results: BinaryHeap<(OrderedFloat<f32>, u32)> = BinaryHeap::new();
        results.push((OrderedFloat(d0), ep));

        while let Some(Reverse((OrderedFloat(dist), node))) = frontier.pop() {
            let worst = results.peek().expect("results never empty").0 .0;
            if dist > worst && results.len() >= ef {
                break;
            }
            for &nb in &self.links[node as usize][level] {
                if visited.test_and_set(nb) {
                    continue;
                }
                let d = self.distance_to(query, nb);
                let worst = results.peek().expect("results never empty").0 .0;
                if results.len() < ef || d < worst {
                    frontier.push(Reverse((OrderedFloat(d), nb)));
                    results.push((OrderedFloat(d), nb));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }

        let mut out: Vec<(f32, u32)> = results
            .into_iter()
            .map(|(d, id)| (d.0, id))
            .collect();
        out.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Prune `candidates` (sorted ascending by distance to the base
    /// point) down to at most `m` neighbors.
    pub fn select_neighbors(
        &self,
        candidates: &[(f32, u32)],
        m: usize,
        strategy: SelectStrategy,
    ) -> Vec<(f32, u32)> {
        debug_assert!(candidates.windows(2).all(|w| w[0].0 <= w[1].0));
        match strategy {
            SelectStrategy::Simple => candidates.iter().take(m).copied().collect(),
            SelectStrategy::Heuristic => {
                let mut kept: Vec<(f32, u32)> = Vec::with_capacity(m.min(candidates.len()));
                for &(d, c) in candidates {
                    if kept.len() >= m {
                        break;
                    }
                    if kept.iter().all(|&(_, e)| d < self.distance_between(c, e)) {
                        kept.push((d, c));
                    }
                }
                kept
            }
        }
    }

    /// Insert a vector, wiring it into every layer up to its drawn level.
    /// Returns the new entry id. The first insert becomes the entry point.
    pub fn insert(&mut self, feature: &FeatureVector, label: u32) -> Result<usize> {
        if feature.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        let id = self.len() as u32;
        let level = self.assign_level();
        self.vectors.extend_from_slice(feature.values());
        self.labels.push(label);
        self.links.push(vec![Vec::new(); level + 1]);

        let Some(mut ep) = self.entry_point else {
            self.entry_point = Some(id);
            self.max_level = level;
            return Ok(id as usize);
        };

        let query = feature.values().to_vec();
        let top = self.max_level;
        for lc in (level + 1..=top).rev() {
            ep = self.greedy_closest(&query, ep, lc);
        }

        for lc in (0..=level.min(top)).rev() {
            let found = self.search_layer(&query, ep, self.params.ef_construction, lc);
            let selected =
                self.select_neighbors(&found, self.params.m, SelectStrategy::Heuristic);

            let ids: Vec<u32> = selected.iter().map(|&(_, c)| c).collect();
            self.links[id as usize][lc] = ids.clone();

            let cap = if lc == 0 { self.params.m0 } else { self.params.m };
            for nb in ids {
                self.links[nb as usize][lc].push(id);
                if self.links[nb as usize][lc].len() > cap {
                    let mut cands: Vec<(f32, u32)> = self.links[nb as usize][lc]
                        .iter()
                        .map(|&x| (self.distance_between(nb, x), x))
                        .collect();
                    cands.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let pruned = self.select_neighbors(&cands, cap, SelectStrategy::Heuristic);
                    self.links[nb as usize][lc] = pruned.into_iter().map(|(_, c)| c).collect();
                }
            }

            ep = found[0].1;
        }

        if level > self.max_level {
            self.entry_point = Some(id);
            self.max_level = level;
        }
        Ok(id as usize)
    }

    /// k-nearest search with an explicit beam width (clamped up to `k`).
    pub fn search(&self, query: &FeatureVector, k: usize, ef: usize) -> Result<Vec<NeighborHit>> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if query.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let q = query.values();
        let mut ep = self.entry_point.expect("non-empty index has an entry point");
        for lc in (1..=self.max_level).rev() {
            ep = self.greedy_closest(q, ep, lc);
        }
        let hits = self.search_layer(q, ep, ef.max(k), 0);
        Ok(hits
            .into_iter()
            .take(k)
            .map(|(distance, id)| NeighborHit {
                entry_id: id as usize,
                label: self.labels[id as usize],
                distance,
            })
            .collect())
    }

    /// Search with the configured `ef_search`.
    pub fn search_default(&self, query: &FeatureVector, k: usize) -> Result<Vec<NeighborHit>> {
        self.search(query, k, self.params.ef_search)
    }

    /// Walk the whole graph and check every structural invariant.
    pub fn validate_structure(&self) -> Result<()> {
        let n = self.len();
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if n == 0 {
            if self.entry_point.is_some() {
                return fail("entry point set on empty index".into());
            }
            return Ok(());
        }
        let Some(ep) = self.entry_point else {
            return fail("missing entry point".into());
        };
        let mut top = 0;
        for id in 0..n {
            let levels = &self.links[id];
            if levels.is_empty() {
                return fail(format!("node {id} has no layer-0 list"));
            }
            top = top.max(levels.len() - 1);
            for (lc, list) in levels.iter().enumerate() {
                let cap = if lc == 0 { self.params.m0 } else { self.params.m };
                if list.len() > cap {
                    return fail(format!(
                        "node {id} level {lc} has {} neighbors, cap {cap}",
                        list.len()
                    ));
                }
                let mut seen = std::collections::HashSet::new();
                for &nb in list {
                    if nb as usize >= n {
                        return fail(format!("node {id} links to missing node {nb}"));
                    }
                    if nb == id as u32 {
                        return fail(format!("node {id} links to itself"));
                    }
                    if !seen.insert(nb) {
                        return fail(format!("node {id} level {lc} repeats neighbor {nb}"));
                    }
                    if self.node_level(nb as usize) < lc {
                        return fail(format!(
                            "node {id} level {lc} links to node {nb} of lower level"
                        ));
                    }
                }
            }
        }
        if self.node_level(ep as usize) != self.max_level {
            return fail("entry point is not at the top level".into());
        }
        if self.max_level != top {
            return fail(format!(
                "stored max level {} but highest node level is {top}",
                self.max_level
            ));
        }
        Ok(())
    }

    pub(crate) fn raw_parts(&self) -> (&HnswParams, usize, &[f32], &[u32], &[Vec<Vec<u32>>]) {
        (&self.params, self.dim, &self.vectors, &self.labels, &self.links)
    }

    pub(crate) fn from_parts(
        params: HnswParams,
        dim: usize,
        vectors: Vec<f32>,
        labels: Vec<u32>,
        links: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        params.validate()?;
        let n = labels.len();
        if vectors.len() != n * dim {
            return Err(Error::CorruptSnapshot(format!(
                "vector buffer holds {} floats for {n} nodes of dim {dim}",
                vectors.len()
            )));
        }
        if links.len() != n {
            return Err(Error::CorruptSnapshot("adjacency/node count mismatch".into()));
        }
        let mut max_level = 0;
        let mut entry_point = None;
        for (id, levels) in links.iter().enumerate() {
            if levels.is_empty() {
                return Err(Error::CorruptSnapshot(format!("node {id} has no layers")));
            }
            let lvl = levels.len() - 1;
            if lvl > max_level || entry_point.is_none() {
                max_level = lvl;
                entry_point = Some(id as u32);
            }
            for list in levels {
                if list.iter().any(|&nb| nb as usize >= n) {
                    return Err(Error::CorruptSnapshot(format!(
                        "node {id} links to a missing node"
                    )));
                }
            }
        }
        let rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        let idx = Self {
            params,
            dim,
            vectors,
            labels,
            links,
            entry_point,
            max_level: if n == 0 { 0 } else { max_level },
            rng,
            visited: VisitedPool::new(),
        };
        Ok(idx)
    }
}

impl NeighborIndex for HnswIndex {
    fn len(&self) -> usize {
        self.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert(&mut self, feature: &FeatureVector, label: u32) -> Result<usize> {
        self.insert(feature, label)
    }

    fn search(&self, query: &FeatureVector, k: usize, ef: usize) -> Result<Vec<NeighborHit>> {
        self.search(query, k, ef)
    }
}
