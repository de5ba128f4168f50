//! Adaptive continual memory: online continual learning over an
//! append-only approximate nearest-neighbor index.
//!
//! The system predicts, then learns, one sample per timestep. Storage
//! is unconstrained — every feature ever seen stays in memory — while
//! per-step compute stays logarithmic in the stream length thanks to
//! the HNSW graph behind retrieval.
//!
//! Module map:
//! - [`types`]: shared domain types and vector math
//! - [`ann`]: HNSW index plus the exact brute-force oracle
//! - [`preprocess`]: online scaler, projections, the feature pipeline
//! - [`learner`]: the adaptive memory learner and the method trait
//! - [`baselines`]: NCM, streaming LDA, linear SGD classifiers
//! - [`metrics`]: online accuracy, information retention, near-future
//!   accuracy
//! - [`stream`]: feature files, chronological splits, drift generators
//! - [`harness`]: experiment runner, reports, scaling benchmark

pub mod ann;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod preprocess;
pub mod stream;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    cosine_distance, l2_normalize, FeatureVector, NeighborHit, Prediction, PredictionOutcome,
    StreamRecord,
};
