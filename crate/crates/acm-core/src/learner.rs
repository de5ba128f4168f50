//! The adaptive continual memory learner.
//!
//! Per timestep: retrieve the k nearest stored features, predict by
//! majority vote, receive the label, insert the new pair. Every stored
//! sample stays forever; the only hyperparameter is k, re-tuned online
//! by simulating the arrival of recent samples against the memory with
//! each sample's own entry excluded (leave-one-out).

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ann::{BruteForceIndex, HnswIndex, HnswParams, NeighborIndex};
use crate::error::{Error, Result};
use crate::types::{FeatureVector, NeighborHit, Prediction, PredictionOutcome, StreamRecord};

/// Exact-match distance threshold for the optional short-circuit.
const EXACT_MATCH_EPS: f32 = 1e-9;

/// One method interface drives every learner in the harness: predict
/// receives the feature only (labels cannot leak into prediction by
/// construction), learn receives the revealed label afterwards.
pub trait OnlineLearner: Send + Sync {
    fn predict(&self, feature: &FeatureVector) -> Prediction;

    fn learn(&mut self, feature: &FeatureVector, label: u32) -> Result<()>;

    /// Number of stored units (memory entries, class rows, ...).
    fn memory_count(&self) -> usize;

    /// Current neighbor count, for methods that have one.
    fn current_k(&self) -> Option<usize> {
        None
    }

    /// Finalize caches before frozen evaluation.
    fn freeze(&mut self) {}

    /// Predict-then-learn on one record, timing each half separately
    /// with a monotonic clock. Prediction strictly precedes the label.
    fn step(&mut self, record: &StreamRecord, timestep: u64) -> Result<PredictionOutcome> {
        let start = Instant::now();
        let predicted = self.predict(&record.feature);
        let predict_ns = start.elapsed().as_nanos() as u64;
        let start = Instant::now();
        self.learn(&record.feature, record.label)?;
        let learn_ns = start.elapsed().as_nanos() as u64;
        Ok(PredictionOutcome {
            timestep,
            predicted,
            truth: record.label,
            correct: predicted == Some(record.label),
            predict_ns,
            learn_ns,
        })
    }
}

/// Learner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcmConfig {
    pub k_initial: usize,
    /// Upper bound of the k search; recalibration retrieves this many
    /// neighbors and scans powers of two inside the ranked list.
    pub k_max: usize,
    /// Steps between recalibrations; 0 disables recalibration.
    pub recalib_interval: usize,
    /// How many recent samples the recalibration window holds.
    pub recalib_window: usize,
    /// Return the nearest label directly when its distance is ~0.
    pub exact_match_shortcircuit: bool,
    /// Exclude each window sample's own entry while simulating it.
    pub leave_one_out: bool,
    pub hnsw: HnswParams,
}

impl Default for AcmConfig {
    fn default() -> Self {
        Self {
            k_initial: 16,
            k_max: 512,
            recalib_interval: 1000,
            recalib_window: 1000,
            exact_match_shortcircuit: false,
            leave_one_out: true,
            hnsw: HnswParams::default(),
        }
    }
}

impl AcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_initial == 0 || self.k_max == 0 {
            return Err(Error::InvalidConfig("k values must be positive".into()));
        }
        if self.k_initial > self.k_max {
            return Err(Error::InvalidConfig("k_initial must not exceed k_max".into()));
        }
        self.hnsw.validate()
    }

    /// Candidate k values: powers of two in [1, k_max].
    pub fn k_candidates(&self) -> Vec<usize> {
        let mut ks = Vec::new();
        let mut k = 1usize;
        while k <= self.k_max {
            ks.push(k);
            k *= 2;
        }
        ks
    }
}

#[derive(Debug, Clone)]
struct RecentSample {
    entry_id: usize,
    feature: FeatureVector,
    label: u32,
}

/// Memory plus the current k and the recalibration window, generic over
/// the retrieval backend (graph for production, exact scan as oracle).
#[derive(Debug)]
pub struct AcmLearner<I: NeighborIndex> {
    memory: I,
    k: usize,
    recent: VecDeque<RecentSample>,
    steps_since_recalib: usize,
    config: AcmConfig,
}

/// The production learner.
pub type HnswAcm = AcmLearner<HnswIndex>;
/// Exact-retrieval twin used as oracle and as the BRUTE_KNN method.
pub type BruteKnn = AcmLearner<BruteForceIndex>;

impl AcmLearner<HnswIndex> {
    pub fn new(dim: usize, config: AcmConfig) -> Result<Self> {
        config.validate()?;
        let memory = HnswIndex::new(dim, config.hnsw.clone())?;
        Ok(Self::from_index(memory, config))
    }
}

impl AcmLearner<BruteForceIndex> {
    pub fn new_exact(dim: usize, config: AcmConfig) -> Result<Self> {
        config.validate()?;
        let memory = BruteForceIndex::new(dim);
        Ok(Self::from_index(memory, config))
    }
}

impl<I: NeighborIndex> AcmLearner<I> {
    /// Wrap an existing (possibly pre-filled) index.
    pub fn from_index(memory: I, config: AcmConfig) -> Self {
        let k = config.k_initial;
        Self {
            memory,
            k,
            recent: VecDeque::with_capacity(config.recalib_window),
            steps_since_recalib: 0,
            config,
        }
    }

    pub fn memory(&self) -> &I {
        &self.memory
    }

    pub fn config(&self) -> &AcmConfig {
        &self.config
    }

    /// The configured neighbor count. Retrieval clamps it to the
    /// current memory size.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn effective_k(&self) -> usize {
        self.k.min(self.memory.len()).max(1)
    }

    fn search_ef(&self, k: usize) -> usize {
        self.config.hnsw.ef_search.max(k)
    }

    /// Majority vote over hits sorted by ascending distance. Ties go to
    /// the tied label whose nearest representative is closest, i.e. the
    /// earliest first occurrence in the ranked list.
    fn majority_vote(hits: &[NeighborHit]) -> Prediction {
        let mut tally: Vec<(u32, usize, usize)> = Vec::new(); // label, votes, first index
        for (i, hit) in hits.iter().enumerate() {
            match tally.iter_mut().find(|(l, _, _)| *l == hit.label) {
                Some((_, votes, _)) => *votes += 1,
                None => tally.push((hit.label, 1, i)),
            }
        }
        tally
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
            .map(|(label, _, _)| label)
    }

    /// Retrieve and vote; also returns the raw hits.
    pub fn predict_with_hits(&self, feature: &FeatureVector) -> (Prediction, Vec<NeighborHit>) {
        if self.memory.is_empty() {
            return (None, Vec::new());
        }
        let k = self.effective_k();
        let hits = match self.memory.search(feature, k, self.search_ef(k)) {
            Ok(hits) => hits,
            Err(_) => return (None, Vec::new()),
        };
        if hits.is_empty() {
            return (None, Vec::new());
        }
        if self.config.exact_match_shortcircuit && hits[0].distance <= EXACT_MATCH_EPS {
            let label = hits[0].label;
            return (Some(label), hits);
        }
        let vote = Self::majority_vote(&hits);
        (vote, hits)
    }

    /// Insert the sample, remember it in the recalibration window, and
    /// recalibrate k when the schedule and memory size allow.
    pub fn learn_sample(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        let entry_id = self.memory.insert(feature, label)?;
        if self.config.recalib_window > 0 {
            if self.recent.len() == self.config.recalib_window {
                self.recent.pop_front();
            }
            self.recent.push_back(RecentSample {
                entry_id,
                feature: feature.clone(),
                label,
            });
        }
        self.steps_since_recalib += 1;
        if self.config.recalib_interval > 0
            && self.steps_since_recalib >= self.config.recalib_interval
            && self.memory.len() > self.config.k_max
        {
            self.recalibrate_k()?;
            self.steps_since_recalib = 0;
        }
        Ok(())
    }

    /// Simulate the arrival of each window sample: retrieve its k_max
    /// nearest neighbors, drop its own entry, and score every power-of-
    /// two prefix by majority vote against the true label. Sets k to
    /// the best-scoring candidate, smallest k on ties.
    pub fn recalibrate_k(&mut self) -> Result<usize> {
        if self.memory.len() <= self.config.k_max {
            return Err(Error::InsufficientMemory {
                count: self.memory.len(),
                required: self.config.k_max,
            });
        }
        if self.recent.is_empty() {
            return Err(Error::EmptyInput);
        }
        let candidates = self.config.k_candidates();
        let mut correct = vec![0usize; candidates.len()];
        for sample in &self.recent {
            let mut hits = self.memory.search(
                &sample.feature,
                self.config.k_max,
                self.search_ef(self.config.k_max),
            )?;
            if self.config.leave_one_out {
                if let Some(pos) = hits.iter().position(|h| h.entry_id == sample.entry_id) {
                    hits.remove(pos);
                }
            }
            for (ci, &k) in candidates.iter().enumerate() {
                let prefix = &hits[..k.min(hits.len())];
                if Self::majority_vote(prefix) == Some(sample.label) {
                    correct[ci] += 1;
                }
            }
        }
        let mut best = 0usize;
        for ci in 1..candidates.len() {
            if correct[ci] > correct[best] {
                best = ci;
            }
        }
        self.k = candidates[best];
        Ok(self.k)
    }

    /// Per-candidate simulated accuracy over the current window,
    /// exposed so calibration behavior can be inspected and verified.
    pub fn simulated_accuracies(&self) -> Result<Vec<(usize, f64)>> {
        if self.memory.len() <= self.config.k_max {
            return Err(Error::InsufficientMemory {
                count: self.memory.len(),
                required: self.config.k_max,
            });
        }
        if self.recent.is_empty() {
            return Err(Error::EmptyInput);
        }
        let candidates = self.config.k_candidates();
        let mut correct = vec![0usize; candidates.len()];
        for sample in &self.recent {
            let mut hits = self.memory.search(
                &sample.feature,
                self.config.k_max,
                self.search_ef(self.config.k_max),
            )?;
            if self.config.leave_one_out {
                if let Some(pos) = hits.iter().position(|h| h.entry_id == sample.entry_id) {
                    hits.remove(pos);
                }
            }
            for (ci, &k) in candidates.iter().enumerate() {
                let prefix = &hits[..k.min(hits.len())];
                if Self::majority_vote(prefix) == Some(sample.label) {
                    correct[ci] += 1;
                }
            }
        }
        let n = self.recent.len() as f64;
        Ok(candidates
            .iter()
            .zip(&correct)
            .map(|(&k, &c)| (k, c as f64 / n))
            .collect())
    }
}

impl<I: NeighborIndex> OnlineLearner for AcmLearner<I> {
    fn predict(&self, feature: &FeatureVector) -> Prediction {
        self.predict_with_hits(feature).0
    }

    fn learn(&mut self, feature: &FeatureVector, label: u32) -> Result<()> {
        self.learn_sample(feature, label)
    }

    fn memory_count(&self) -> usize {
        self.memory.len()
    }

    fn current_k(&self) -> Option<usize> {
        Some(self.k)
    }
}

/// Learner persistence: config + current k, then the index snapshot.
const LEARNER_MAGIC: &[u8; 8] = b"ACMLRN1\0";

impl AcmLearner<HnswIndex> {
    pub fn save_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(LEARNER_MAGIC)?;
        let config =
            serde_json::to_vec(&self.config).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        w.write_all(&(config.len() as u32).to_le_bytes())?;
        w.write_all(&config)?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        self.memory.save_to(w)
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Restore a learner. The recalibration window restarts empty.
    pub fn load_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::TruncatedFile("learner file ended in magic".into()))?;
        if &magic != LEARNER_MAGIC {
            return Err(Error::BadMagic { expected: "ACMLRN1" });
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)
            .map_err(|_| Error::TruncatedFile("learner file ended in header".into()))?;
        let mut config_bytes = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut config_bytes)
            .map_err(|_| Error::TruncatedFile("learner file ended in config".into()))?;
        let config: AcmConfig = serde_json::from_slice(&config_bytes)
            .map_err(|e| Error::InvalidConfig(format!("bad learner config: {e}")))?;
        config.validate()?;
        let mut kb = [0u8; 4];
        r.read_exact(&mut kb)
            .map_err(|_| Error::TruncatedFile("learner file ended before k".into()))?;
        let k = u32::from_le_bytes(kb) as usize;
        let memory = HnswIndex::load_from(r)?;
        let mut learner = Self::from_index(memory, config);
        learner.k = k.max(1);
        Ok(learner)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::load_from(&mut r)
    }
}
