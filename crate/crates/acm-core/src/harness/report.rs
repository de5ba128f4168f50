//! Run reports and their on-disk forms: per-step rows (CSV or JSON
//! lines, fixed column order), a JSON summary, and a plot-ready
//! accuracy curve. The summary is always derivable from the rows.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RetentionReport;
use crate::types::Prediction;

pub const ROW_HEADER: &str = "timestep,predicted,truth,correct,predict_ns,learn_ns,current_k";

/// One online step, as emitted. `current_k` is 0 for methods without a
/// neighbor count; `predicted` is empty/null on abstention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub timestep: u64,
    pub predicted: Prediction,
    pub truth: u32,
    pub correct: bool,
    pub predict_ns: u64,
    pub learn_ns: u64,
    pub current_k: u32,
}

/// Final summary of a run. Metrics that cannot be computed (empty
/// splits, disabled options) are null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_online_accuracy: Option<f64>,
    pub retention: Option<f64>,
    pub retention_window: Option<usize>,
    pub test_accuracy: Option<f64>,
    pub near_future_accuracy: Option<f64>,
    pub near_future_delay: Option<usize>,
    pub predict_ns_median: Option<u64>,
    pub predict_ns_p99: Option<u64>,
    pub learn_ns_median: Option<u64>,
    pub learn_ns_p99: Option<u64>,
    pub peak_memory_count: usize,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: String,
    pub rows: Vec<ReportRow>,
    pub summary: RunSummary,
    pub retention: Option<RetentionReport>,
    /// a_t for t = 1..steps.
    pub accuracy_curve: Vec<f64>,
}

/// Nearest-rank percentile of a sorted slice.
pub fn percentile(sorted: &[u64], q: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

pub(super) fn summarize(
    rows: &[ReportRow],
    final_online_accuracy: Option<f64>,
    retention: Option<&RetentionReport>,
    near_future: Option<f64>,
    near_future_delay: Option<usize>,
    peak_memory_count: usize,
) -> RunSummary {
    let mut predict: Vec<u64> = rows.iter().map(|r| r.predict_ns).collect();
    let mut learn: Vec<u64> = rows.iter().map(|r| r.learn_ns).collect();
    predict.sort_unstable();
    learn.sort_unstable();
    RunSummary {
        steps: rows.len(),
        final_online_accuracy,
        retention: retention.map(|r| r.ir),
        retention_window: retention.map(|r| r.window),
        test_accuracy: retention.map(|r| r.overall_accuracy),
        near_future_accuracy: near_future,
        near_future_delay,
        predict_ns_median: percentile(&predict, 0.5),
        predict_ns_p99: percentile(&predict, 0.99),
        learn_ns_median: percentile(&learn, 0.5),
        learn_ns_p99: percentile(&learn, 0.99),
        peak_memory_count,
    }
}

/// Output format for the per-step rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

pub fn format_row_csv(row: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        row.timestep,
        row.predicted.map_or(String::new(), |p| p.to_string()),
        row.truth,
        row.correct,
        row.predict_ns,
        row.learn_ns,
        row.current_k
    )
}

pub fn write_rows_csv(w: &mut impl Write, rows: &[ReportRow]) -> Result<()> {
    writeln!(w, "{ROW_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", format_row_csv(row))?;
    }
    Ok(())
}

pub fn write_rows_jsonl(w: &mut impl Write, rows: &[ReportRow]) -> Result<()> {
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parse rows written by [`write_rows_csv`], header included.
pub fn parse_rows_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == ROW_HEADER => {}
        _ => return Err(Error::InvalidConfig("missing or unexpected row header".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidConfig(format!(
                "row {} has {} fields, expected 7",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::InvalidConfig(format!("row {}: bad {what}", lineno + 2));
        rows.push(ReportRow {
            timestep: fields[0].parse().map_err(|_| bad("timestep"))?,
            predicted: if fields[1].is_empty() {
                None
            } else {
                Some(fields[1].parse().map_err(|_| bad("predicted"))?)
            },
            truth: fields[2].parse().map_err(|_| bad("truth"))?,
            correct: fields[3].parse().map_err(|_| bad("correct"))?,
            predict_ns: fields[4].parse().map_err(|_| bad("predict_ns"))?,
            learn_ns: fields[5].parse().map_err(|_| bad("learn_ns"))?,
            current_k: fields[6].parse().map_err(|_| bad("current_k"))?,
        });
    }
    Ok(rows)
}

/// Summary as a single JSON document, bucket accuracies included.
pub fn write_summary_json(
    w: &mut impl Write,
    report: &RunReport,
) -> Result<()> {
    #[derive(Serialize)]
    struct SummaryDoc<'a> {
        method: &'a str,
        #[serde(flatten)]
        summary: &'a RunSummary,
        buckets: Vec<&'a crate::metrics::BucketAccuracy>,
    }
    let doc = SummaryDoc {
        method: &report.method,
        summary: &report.summary,
        buckets: report
            .retention
            .as_ref()
            .map(|r| r.buckets.iter().collect())
            .unwrap_or_default(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Plot-ready (t, a_t) pairs.
pub fn write_accuracy_curve_csv(w: &mut impl Write, curve: &[f64]) -> Result<()> {
    writeln!(w, "t,online_accuracy")?;
    for (i, a) in curve.iter().enumerate() {
        writeln!(w, "{},{a}", i + 1)?;
    }
    Ok(())
}

/// Write rows, summary, and accuracy curve into `dir`. Returns the
/// created file paths.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let rows_path = dir.join(match format {
        ReportFormat::Csv => "rows.csv",
        ReportFormat::Jsonl => "rows.jsonl",
    });
    {
        let mut w = BufWriter::new(File::create(&rows_path)?);
        match format {
            ReportFormat::Csv => write_rows_csv(&mut w, &report.rows)?,
            ReportFormat::Jsonl => write_rows_jsonl(&mut w, &report.rows)?,
        }
        w.flush()?;
    }
    let summary_path = dir.join("summary.json");
    {
        let mut w = BufWriter::new(File::create(&summary_path)?);
        write_summary_json(&mut w, report)?;
        w.flush()?;
    }
    let curve_path = dir.join("accuracy_curve.csv");
    {
        let mut w = BufWriter::new(File::create(&curve_path)?);
        write_accuracy_curve_csv(&mut w, &report.accuracy_curve)?;
        w.flush()?;
    }
    Ok(vec![rows_path, summary_path, curve_path])
}
