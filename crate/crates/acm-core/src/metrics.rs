//! Evaluation metrics over outcome logs and frozen-model test sweeps.
//! All of these are pure functions of their inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, Prediction, PredictionOutcome, StreamRecord};

/// Ordered per-timestep outcomes with strictly increasing timesteps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeLog {
    outcomes: Vec<PredictionOutcome>,
}

impl OutcomeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, outcome: PredictionOutcome) -> Result<()> {
        if let Some(last) = self.outcomes.last() {
            if outcome.timestep <= last.timestep {
                return Err(Error::InvalidConfig(format!(
                    "outcome timestep {} does not increase past {}",
                    outcome.timestep, last.timestep
                )));
            }
        }
        self.outcomes.push(outcome);
        Ok(())
    }

    pub fn from_outcomes(outcomes: Vec<PredictionOutcome>) -> Result<Self> {
        let mut log = Self::new();
        for o in outcomes {
            log.push(o)?;
        }
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[PredictionOutcome] {
        &self.outcomes
    }
}

/// Running mean of the correct flags: a_t for every prefix of the log.
pub fn online_accuracy(log: &OutcomeLog) -> Result<Vec<f64>> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut correct = 0usize;
    Ok(log
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, o)| {
            if o.correct {
                correct += 1;
            }
            correct as f64 / (i + 1) as f64
        })
        .collect())
}

/// Accuracy of one equal-width time bucket of the test sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketAccuracy {
    pub start_ts: i64,
    pub end_ts: i64,
    pub count: usize,
    pub correct: usize,
    /// None for empty buckets.
    pub accuracy: Option<f64>,
}

/// Frozen-model retention sweep results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    /// Mean accuracy over the last `window` test records by timestamp.
    pub ir: f64,
    pub window: usize,
    /// Accuracy over the whole test set.
    pub overall_accuracy: f64,
    /// Per-bucket accuracies over equal-width time buckets.
    pub buckets: Vec<BucketAccuracy>,
}

/// Evaluate a frozen model over test records ordered by timestamp.
///
/// `window` is the information-retention horizon h; bucket accuracies
/// over `num_buckets` equal-width time spans feed retention-vs-time
/// curves. Evaluation is read-only and parallelized over records.
pub fn information_retention<F>(
    predict: F,
    test: &[StreamRecord],
    window: usize,
    num_buckets: usize,
) -> Result<RetentionReport>
where
    F: Fn(&FeatureVector) -> Prediction + Sync,
{
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if window == 0 || window > test.len() {
        return Err(Error::WindowTooLarge {
            window,
            len: test.len(),
        });
    }
    debug_assert!(
        test.windows(2).all(|w| (w[0].timestamp, w[0].id) <= (w[1].timestamp, w[1].id)),
        "test records must be ordered by timestamp"
    );

    let flags: Vec<bool> = test
        .par_iter()
        .map(|r| predict(&r.feature) == Some(r.label))
        .collect();

    let total_correct = flags.iter().filter(|&&c| c).count();
    let overall_accuracy = total_correct as f64 / test.len() as f64;
    let tail = &flags[test.len() - window..];
    let ir = tail.iter().filter(|&&c| c).count() as f64 / window as f64;

    let buckets = bucketize(test, &flags, num_buckets.max(1));

    Ok(RetentionReport {
        ir,
        window,
        overall_accuracy,
        buckets,
    })
}

fn bucketize(test: &[StreamRecord], flags: &[bool], num_buckets: usize) -> Vec<BucketAccuracy> {
    let t_min = test.first().expect("non-empty").timestamp;
    let t_max = test.last().expect("non-empty").timestamp;
    let span = (t_max - t_min) as f64;
    let width = span / num_buckets as f64;

    let mut counts = vec![(0usize, 0usize); num_buckets];
    for (r, &ok) in test.iter().zip(flags) {
        let idx = if width > 0.0 {
            (((r.timestamp - t_min) as f64 / width) as usize).min(num_buckets - 1)
        } else {
            0
        };
        counts[idx].0 += 1;
        if ok {
            counts[idx].1 += 1;
        }
    }

    counts
        .into_iter()
        .enumerate()
        .map(|(i, (count, correct))| BucketAccuracy {
            start_ts: t_min + (i as f64 * width) as i64,
            end_ts: if i + 1 == num_buckets {
                t_max
            } else {
                t_min + ((i + 1) as f64 * width) as i64
            },
            count,
            correct,
            accuracy: (count > 0).then(|| correct as f64 / count as f64),
        })
        .collect()
}

/// Running mean of the delayed-evaluation correctness flags.
///
/// Position t holds whether the model state after step t classified the
/// record arriving `delay` steps later; tail positions where no such
/// record exists are `None` and excluded. Input length is the stream
/// length, so `delay >= len` means no position is defined.
pub fn near_future_accuracy(delayed_correct: &[Option<bool>], delay: usize) -> Result<Vec<f64>> {
    if delay == 0 || delay >= delayed_correct.len() {
        return Err(Error::DelayTooLarge {
            delay,
            len: delayed_correct.len(),
        });
    }
    let defined: Vec<bool> = delayed_correct
        .iter()
        .filter_map(|c| c.as_ref().copied())
        .collect();
    let mut correct = 0usize;
    Ok(defined
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c {
                correct += 1;
            }
            correct as f64 / (i + 1) as f64
        })
        .collect())
}
