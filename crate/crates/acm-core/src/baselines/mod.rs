//! Fixed-feature streaming baselines sharing the learner interface:
//! nearest class mean, streaming LDA, and one-pass linear classifiers.
//!
//! All of them break argmax ties toward the lowest class id.

mod ncm;
mod sgd;
mod slda;

pub use ncm::NcmClassifier;
pub use sgd::{SgdClassifier, SgdLoss};
pub use slda::SldaClassifier;
