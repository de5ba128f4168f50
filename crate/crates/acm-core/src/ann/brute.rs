//! Exact linear-scan index; the oracle the graph index is checked against.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use super::NeighborIndex;
use crate::error::{Error, Result};
use crate::types::{dot, FeatureVector, NeighborHit};

/// Flat store of (feature, label) pairs with exact k-nearest search.
#[derive(Debug, Clone, Default)]
pub struct BruteForceIndex {
    dim: usize,
    vectors: Vec<f32>,
    labels: Vec<u32>,
}

impl BruteForceIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vector(&self, id: usize) -> &[f32] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn label(&self, id: usize) -> u32 {
        self.labels[id]
    }

    pub fn insert(&mut self, feature: &FeatureVector, label: u32) -> Result<usize> {
        if feature.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        self.vectors.extend_from_slice(feature.values());
        self.labels.push(label);
        Ok(self.labels.len() - 1)
    }

    /// Exact k nearest, ascending by distance, ties broken by lower id.
    pub fn search(&self, query: &FeatureVector, k: usize) -> Result<Vec<NeighborHit>> {
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
        // max-heap of the k best so far; the heap key (distance, id)
        // evicts the farthest, highest-id entry first.
        let mut best: BinaryHeap<(OrderedFloat<f32>, usize)> = BinaryHeap::new();
        for id in 0..self.len() {
            let d = (1.0 - dot(q, self.vector(id))).clamp(0.0, 2.0);
            if best.len() < k {
                best.push((OrderedFloat(d), id));
            } else if let Some(&(worst, worst_id)) = best.peek() {
                if (OrderedFloat(d), id) < (worst, worst_id) {
                    best.pop();
                    best.push((OrderedFloat(d), id));
                }
            }
        }
        let mut hits: Vec<NeighborHit> = best
            .into_iter()
            .map(|(d, id)| NeighborHit {
                entry_id: id,
                label: self.labels[id],
                distance: d.0,
            })
            .collect();
        hits.sort_unstable_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.entry_id.cmp(&b.entry_id))
        });
        Ok(hits)
    }
}

impl NeighborIndex for BruteForceIndex {
    fn len(&self) -> usize {
        self.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn insert(&mut self, feature: &FeatureVector, label: u32) -> Result<usize> {
        self.insert(feature, label)
    }

    fn search(&self, query: &FeatureVector, k: usize, _ef: usize) -> Result<Vec<NeighborHit>> {
        self.search(query, k)
    }
}

#[allow(unused)]
fn min_heap_marker(_: Reverse<u32>) {}
