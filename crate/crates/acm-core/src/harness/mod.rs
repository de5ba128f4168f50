//! Experiment runner: dataset loading, the pretrain/online/test
//! protocol, method dispatch, and latency accounting.
//!
//! The online loop is strictly sequential: one record at a time,
//! predict before the label is revealed, then learn. Reproducibility is
//! a hard contract: (config, seed) determines every emitted row.

mod bench;
mod report;

pub use bench::{bench_index, write_bench_csv, BenchConfig, BenchRow};
pub use report::{
    emit_report, format_row_csv, parse_rows_csv, write_accuracy_curve_csv, write_rows_csv,
    write_rows_jsonl, write_summary_json, ReportFormat, ReportRow, RunReport, RunSummary,
    ROW_HEADER,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ann::BruteForceIndex;
use crate::baselines::{NcmClassifier, SgdClassifier, SgdLoss, SldaClassifier};
use crate::error::{Error, Result};
use crate::learner::{AcmConfig, AcmLearner, OnlineLearner};
use crate::metrics::{information_retention, near_future_accuracy, online_accuracy, OutcomeLog};
use crate::preprocess::{Pipeline, ProjectionWeights};
use crate::stream::{
    chronological_split, generate_drift_stream, read_feature_file, DriftConfig, FeatureDataset,
    SplitSpec,
};

/// Where the records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// A binary feature file on disk.
    FeatureFile { path: PathBuf },
    /// A synthetic drift stream generated in-process.
    Drift(DriftConfig),
}

/// Which method runs the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MethodSpec {
    Acm(AcmConfig),
    /// Exact kNN with a fixed k; the linear-scan control.
    BruteKnn { k: usize },
    Ncm,
    Slda {
        shrinkage: f64,
        refresh_interval: u64,
    },
    SgdLogistic { learning_rate: f64 },
    SgdHinge { learning_rate: f64 },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Acm(_) => "acm",
            MethodSpec::BruteKnn { .. } => "brute_knn",
            MethodSpec::Ncm => "ncm",
            MethodSpec::Slda { .. } => "slda",
            MethodSpec::SgdLogistic { .. } => "sgd_logistic",
            MethodSpec::SgdHinge { .. } => "sgd_hinge",
        }
    }
}

/// Preprocessing switches: online scaler on/off, and either a weights
/// file or a seeded random projection down to `random_projection_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub scaler: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection_weights: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_projection_dim: Option<usize>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            scaler: true,
            projection_weights: None,
            random_projection_dim: None,
        }
    }
}

/// Metric knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    /// Retention horizon h; None means the whole test split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_window: Option<usize>,
    /// Near-future delay d; 0 disables the delayed evaluations.
    pub near_future_delay: usize,
    pub retention_buckets: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            retention_window: None,
            near_future_delay: 100,
            retention_buckets: 20,
        }
    }
}

/// One fully reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitSpec,
    pub method: MethodSpec,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub metrics: MetricParams,
    /// Seeds the random projection (when used).
    #[serde(default)]
    pub seed: u64,
    /// When false, latency columns are zeroed so rows are byte-stable.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if let DatasetSource::Drift(d) = &self.dataset {
            d.validate()?;
        }
        if let MethodSpec::Acm(c) = &self.method {
            c.validate()?;
        }
        if let MethodSpec::BruteKnn { k } = &self.method {
            if *k == 0 {
                return Err(Error::InvalidConfig("brute kNN k must be positive".into()));
            }
        }
        if self.preprocess.projection_weights.is_some()
            && self.preprocess.random_projection_dim.is_some()
        {
            return Err(Error::InvalidConfig(
                "choose either a weights file or a random projection, not both".into(),
            ));
        }
        Ok(())
    }
}

fn load_dataset(source: &DatasetSource) -> Result<FeatureDataset> {
    match source {
        DatasetSource::FeatureFile { path } => read_feature_file(path),
        DatasetSource::Drift(config) => {
            let records = generate_drift_stream(config)?;
            Ok(FeatureDataset {
                dim: config.dim,
                class_count: config.num_classes as u32,
                records,
            })
        }
    }
}

fn build_method(spec: &MethodSpec, dim: usize) -> Result<Box<dyn OnlineLearner>> {
    Ok(match spec {
        MethodSpec::Acm(config) => Box::new(AcmLearner::new(dim, config.clone())?),
        MethodSpec::BruteKnn { k } => {
            let config = AcmConfig {
                k_initial: *k,
                k_max: (*k).max(AcmConfig::default().k_max),
                recalib_interval: 0,
                ..AcmConfig::default()
            };
            Box::new(AcmLearner::from_index(BruteForceIndex::new(dim), config))
        }
        MethodSpec::Ncm => Box::new(NcmClassifier::new(dim)),
        MethodSpec::Slda {
            shrinkage,
            refresh_interval,
        } => Box::new(SldaClassifier::new(dim, *shrinkage, *refresh_interval)?),
        MethodSpec::SgdLogistic { learning_rate } => {
            Box::new(SgdClassifier::new(dim, SgdLoss::Logistic, *learning_rate)?)
        }
        MethodSpec::SgdHinge { learning_rate } => {
            Box::new(SgdClassifier::new(dim, SgdLoss::Hinge, *learning_rate)?)
        }
    })
}

/// Run the full protocol and collect everything in memory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_observed(config, |_| Ok(()))
}

/// Same, but hands each finished row to `on_row` as it is produced so
/// callers can stream partial results to disk.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    mut on_row: impl FnMut(&ReportRow) -> Result<()>,
) -> Result<RunReport> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset)?;
    let raw_dim = dataset.dim;
    let (pretrain, online, test) = chronological_split(dataset.records, &config.split)?;

    let projection = match (
        &config.preprocess.projection_weights,
        config.preprocess.random_projection_dim,
    ) {
        (Some(path), _) => Some(ProjectionWeights::load_file(path)?),
        (None, Some(out_dim)) => Some(ProjectionWeights::random(raw_dim, out_dim, config.seed)),
        (None, None) => None,
    };
    let mut pipeline = Pipeline::new(projection, config.preprocess.scaler, raw_dim)?;
    let mut method = build_method(&config.method, pipeline.output_dim())?;

    // pretrain: fit the scaler over the whole split, then warm-start
    // the method on it without logging
    for r in &pretrain {
        pipeline.fit(&r.feature)?;
    }
    for r in &pretrain {
        let z = pipeline.transform_frozen(&r.feature)?;
        method.learn(&z, r.label)?;
    }

    // online phase
    let delay = config.metrics.near_future_delay;
    let mut rows: Vec<ReportRow> = Vec::with_capacity(online.len());
    let mut delayed: Vec<Option<bool>> = Vec::with_capacity(if delay > 0 { online.len() } else { 0 });
    for (i, r) in online.iter().enumerate() {
        let z = pipeline.ingest(&r.feature)?;
        let processed = crate::types::StreamRecord {
            id: r.id,
            timestamp: r.timestamp,
            label: r.label,
            feature: z,
        };
        let mut outcome = method.step(&processed, (i + 1) as u64)?;
        if !config.record_timing {
            outcome.predict_ns = 0;
            outcome.learn_ns = 0;
        }
        let row = ReportRow {
            timestep: outcome.timestep,
            predicted: outcome.predicted,
            truth: outcome.truth,
            correct: outcome.correct,
            predict_ns: outcome.predict_ns,
            learn_ns: outcome.learn_ns,
            current_k: method.current_k().unwrap_or(0) as u32,
        };
        on_row(&row)?;
        rows.push(row);

        if delay > 0 {
            if i + delay < online.len() {
                let future = &online[i + delay];
                let zf = pipeline.transform_frozen(&future.feature)?;
                delayed.push(Some(method.predict(&zf) == Some(future.label)));
            } else {
                delayed.push(None);
            }
        }
    }

    // frozen-model retention sweep
    method.freeze();
    let retention = if test.is_empty() {
        None
    } else {
        let window = config
            .metrics
            .retention_window
            .unwrap_or(test.len());
        let mut processed = Vec::with_capacity(test.len());
        for r in &test {
            processed.push(crate::types::StreamRecord {
                id: r.id,
                timestamp: r.timestamp,
                label: r.label,
                feature: pipeline.transform_frozen(&r.feature)?,
            });
        }
        let m = &*method;
        Some(information_retention(
            |f| m.predict(f),
            &processed,
            window,
            config.metrics.retention_buckets,
        )?)
    };

    let accuracy_curve = if rows.is_empty() {
        Vec::new()
    } else {
        let log = OutcomeLog::from_outcomes(
            rows.iter()
                .map(|r| crate::types::PredictionOutcome {
                    timestep: r.timestep,
                    predicted: r.predicted,
                    truth: r.truth,
                    correct: r.correct,
                    predict_ns: r.predict_ns,
                    learn_ns: r.learn_ns,
                })
                .collect(),
        )?;
        online_accuracy(&log)?
    };

    let near_future = if delay > 0 && delay < delayed.len() {
        near_future_accuracy(&delayed, delay)?
            .last()
            .copied()
    } else {
        None
    };

    let summary = report::summarize(
        &rows,
        accuracy_curve.last().copied(),
        retention.as_ref(),
        near_future,
        (delay > 0).then_some(delay),
        method.memory_count(),
    );

    Ok(RunReport {
        method: config.method.name().to_string(),
        rows,
        summary,
        retention,
        accuracy_curve,
    })
}
