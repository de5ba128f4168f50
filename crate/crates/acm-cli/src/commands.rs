//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use acm_core::ann::{HnswIndex, HnswParams};
use acm_core::harness::{
    bench_index, run_experiment_observed, write_accuracy_curve_csv, write_bench_csv,
    write_summary_json, BenchConfig, DatasetSource, ExperimentConfig, MethodSpec, ReportFormat,
    ReportRow, RunReport, ROW_HEADER,
};
use acm_core::learner::AcmConfig;
use acm_core::stream::{
    chronological_split, generate_drift_stream, manifest_line, read_feature_file,
    write_feature_file, ArrivalSchedule, DriftConfig, DriftMode, SplitSpec,
};

#[derive(Args)]
pub struct RunArgs {
    /// Experiment config file (TOML); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature file to stream (overrides the config's dataset).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Method: acm | brute-knn | ncm | slda | sgd-logistic | sgd-hinge.
    #[arg(long)]
    method: Option<String>,
    /// Initial k for acm, fixed k for brute-knn.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ef_construction: Option<usize>,
    #[arg(long)]
    ef_search: Option<usize>,
    /// Steps between k recalibrations (0 disables).
    #[arg(long)]
    recalib_interval: Option<usize>,
    #[arg(long)]
    recalib_window: Option<usize>,
    #[arg(long)]
    pretrain_fraction: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Seed for the split sampling.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Seed for the run (random projection).
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the online scaler.
    #[arg(long)]
    no_scaler: bool,
    /// Projection weights file to apply before scaling.
    #[arg(long)]
    projection: Option<PathBuf>,
    /// Project to this many dims with a seeded random matrix.
    #[arg(long)]
    random_projection_dim: Option<usize>,
    /// Near-future evaluation delay (0 disables).
    #[arg(long)]
    near_future_delay: Option<usize>,
    /// Retention horizon h (defaults to the whole test split).
    #[arg(long)]
    retention_window: Option<usize>,
    #[arg(long)]
    retention_buckets: Option<usize>,
    /// Zero the latency columns so rows are byte-stable across runs.
    #[arg(long)]
    no_timing: bool,
    /// Directory for rows, summary, and accuracy curve.
    #[arg(long, default_value = "acm-out")]
    out_dir: PathBuf,
    /// Row format: csv | jsonl.
    #[arg(long, default_value = "csv")]
    format: String,
}

fn parse_method(name: &str, k: Option<usize>) -> Result<MethodSpec> {
    Ok(match name {
        "acm" => MethodSpec::Acm(AcmConfig {
            k_initial: k.unwrap_or(16),
            ..AcmConfig::default()
        }),
        "brute-knn" | "brute_knn" => MethodSpec::BruteKnn { k: k.unwrap_or(1) },
        "ncm" => MethodSpec::Ncm,
        "slda" => MethodSpec::Slda {
            shrinkage: 1e-4,
            refresh_interval: 100,
        },
        "sgd-logistic" | "sgd_logistic" => MethodSpec::SgdLogistic { learning_rate: 1e-2 },
        "sgd-hinge" | "sgd_hinge" => MethodSpec::SgdHinge { learning_rate: 1e-2 },
        other => bail!("unknown method '{other}'"),
    })
}

pub fn run(args: RunArgs) -> Result<()> {
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => {
            let Some(data) = args.data.clone() else {
                bail!("either --config or --data is required");
            };
            ExperimentConfig {
                dataset: DatasetSource::FeatureFile { path: data },
                split: SplitSpec::default(),
                method: parse_method(args.method.as_deref().unwrap_or("acm"), args.k)?,
                preprocess: Default::default(),
                metrics: Default::default(),
                seed: 0,
                record_timing: true,
            }
        }
    };

    // flag overrides
    if let Some(data) = &args.data {
        config.dataset = DatasetSource::FeatureFile { path: data.clone() };
    }
    if args.config.is_some() {
        if let Some(name) = &args.method {
            config.method = parse_method(name, args.k)?;
        } else if let (Some(k), MethodSpec::Acm(acm)) = (args.k, &mut config.method) {
            acm.k_initial = k;
        } else if let (Some(k), MethodSpec::BruteKnn { k: bk }) = (args.k, &mut config.method) {
            *bk = k;
        }
    }
    if let MethodSpec::Acm(acm) = &mut config.method {
        if let Some(m) = args.m {
            acm.hnsw = HnswParams::with_m(m, acm.hnsw.ef_construction, acm.hnsw.ef_search)
                .seeded(acm.hnsw.rng_seed);
        }
        if let Some(ef) = args.ef_construction {
            acm.hnsw.ef_construction = ef;
        }
        if let Some(ef) = args.ef_search {
            acm.hnsw.ef_search = ef;
        }
        if let Some(r) = args.recalib_interval {
            acm.recalib_interval = r;
        }
        if let Some(w) = args.recalib_window {
            acm.recalib_window = w;
        }
    }
    if let Some(f) = args.pretrain_fraction {
        config.split.pretrain_fraction = f;
    }
    if let Some(f) = args.test_fraction {
        config.split.test_fraction = f;
    }
    if let Some(s) = args.split_seed {
        config.split.seed = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.no_scaler {
        config.preprocess.scaler = false;
    }
    if let Some(p) = &args.projection {
        config.preprocess.projection_weights = Some(p.clone());
    }
    if let Some(d) = args.random_projection_dim {
        config.preprocess.random_projection_dim = Some(d);
    }
    if let Some(d) = args.near_future_delay {
        config.metrics.near_future_delay = d;
    }
    if let Some(h) = args.retention_window {
        config.metrics.retention_window = Some(h);
    }
    if let Some(b) = args.retention_buckets {
        config.metrics.retention_buckets = b;
    }
    if args.no_timing {
        config.record_timing = false;
    }

    let format = match args.format.as_str() {
        "csv" => ReportFormat::Csv,
        "jsonl" => ReportFormat::Jsonl,
        other => bail!("unknown format '{other}'"),
    };

    fs::create_dir_all(&args.out_dir)?;
    let rows_path = args.out_dir.join(match format {
        ReportFormat::Csv => "rows.csv",
        ReportFormat::Jsonl => "rows.jsonl",
    });

    // stream rows to disk as they are produced so an interrupted run
    // still leaves its partial results behind
    let mut rows_file = BufWriter::new(File::create(&rows_path)?);
    if format == ReportFormat::Csv {
        writeln!(rows_file, "{ROW_HEADER}")?;
    }
    let mut since_flush = 0usize;
    let report: RunReport = run_experiment_observed(&config, |row: &ReportRow| {
        match format {
            ReportFormat::Csv => {
                writeln!(rows_file, "{}", acm_core::harness::format_row_csv(row))
                    .map_err(acm_core::Error::Io)?;
            }
            ReportFormat::Jsonl => {
                let line = serde_json::to_string(row)
                    .map_err(|e| acm_core::Error::InvalidConfig(e.to_string()))?;
                writeln!(rows_file, "{line}").map_err(acm_core::Error::Io)?;
            }
        }
        since_flush += 1;
        if since_flush >= 1000 {
            since_flush = 0;
            rows_file.flush().map_err(acm_core::Error::Io)?;
        }
        Ok(())
    })?;
    rows_file.flush()?;

    let summary_path = args.out_dir.join("summary.json");
    {
        let mut w = BufWriter::new(File::create(&summary_path)?);
        write_summary_json(&mut w, &report)?;
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(File::create(args.out_dir.join("accuracy_curve.csv"))?);
        write_accuracy_curve_csv(&mut w, &report.accuracy_curve)?;
        w.flush()?;
    }

    println!("method            {}", report.method);
    println!("online steps      {}", report.summary.steps);
    if let Some(a) = report.summary.final_online_accuracy {
        println!("online accuracy   {a:.4}");
    }
    if let (Some(ir), Some(h)) = (report.summary.retention, report.summary.retention_window) {
        println!("retention IR_h    {ir:.4} (h = {h})");
    }
    if let Some(nf) = report.summary.near_future_accuracy {
        println!("near-future acc   {nf:.4}");
    }
    if let (Some(med), Some(p99)) = (
        report.summary.predict_ns_median,
        report.summary.predict_ns_p99,
    ) {
        println!("predict latency   median {med} ns, p99 {p99} ns");
    }
    if let (Some(med), Some(p99)) = (report.summary.learn_ns_median, report.summary.learn_ns_p99) {
        println!("learn latency     median {med} ns, p99 {p99} ns");
    }
    println!("memory count      {}", report.summary.peak_memory_count);
    println!("report written to {}", args.out_dir.display());
    Ok(())
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated corpus sizes, ascending.
    #[arg(long, default_value = "10000,100000,1000000")]
    sizes: String,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Queries per size.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    ef_construction: usize,
    #[arg(long, default_value_t = 100)]
    ef_search: usize,
    /// Skip the brute-force control timings.
    #[arg(long)]
    no_brute: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>().context("bad --sizes entry"))
        .collect::<Result<_>>()?;
    let config = BenchConfig {
        sizes,
        dim: args.dim,
        trials: args.trials,
        k: args.k,
        params: HnswParams::with_m(args.m, args.ef_construction, args.ef_search)
            .seeded(args.seed),
        include_brute: !args.no_brute,
        seed: args.seed,
    };
    let rows = bench_index(&config)?;
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_bench_csv(&mut w, &rows)?;
            w.flush()?;
            println!("bench table written to {}", path.display());
        }
        None => {
            let mut bytes = Vec::new();
            write_bench_csv(&mut bytes, &rows)?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "splits")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pretrain_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append one manifest line per written file.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn split(args: SplitArgs) -> Result<()> {
    let dataset = read_feature_file(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let spec = SplitSpec {
        pretrain_fraction: args.pretrain_fraction,
        test_fraction: args.test_fraction,
        seed: args.seed,
    };
    let dim = dataset.dim;
    let classes = dataset.class_count;
    let (pretrain, online, test) = chronological_split(dataset.records, &spec)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut manifest_lines = Vec::new();
    for (name, records) in [("pretrain", &pretrain), ("online", &online), ("test", &test)] {
        let path = args.out_dir.join(format!("{name}.acmf"));
        write_feature_file(&path, records, classes, dim)?;
        println!("{name:9} {:7} records -> {}", records.len(), path.display());
        manifest_lines.push(manifest_line(
            &path.to_string_lossy(),
            dim,
            records.len(),
            classes,
        ));
    }
    if let Some(path) = &args.manifest {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
        for line in manifest_lines {
            writeln!(f, "{line}")?;
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct GenDriftArgs {
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Cluster spread.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Drift mode: class-incremental | mean-rotation.
    #[arg(long, default_value = "class-incremental")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    modes_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "drift.acmf")]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn gen_drift(args: GenDriftArgs) -> Result<()> {
    let mode = match args.mode.as_str() {
        "class-incremental" | "class_incremental" => DriftMode::ClassIncremental,
        "mean-rotation" | "mean_rotation" => DriftMode::MeanRotation,
        other => bail!("unknown drift mode '{other}'"),
    };
    let config = DriftConfig {
        num_classes: args.classes,
        dim: args.dim,
        samples: args.samples,
        mode,
        arrival: ArrivalSchedule::Uniform,
        sigma: args.sigma,
        modes_per_class: args.modes_per_class,
        seed: args.seed,
    };
    let records = generate_drift_stream(&config)?;
    write_feature_file(&args.out, &records, args.classes as u32, args.dim)?;
    println!(
        "wrote {} records ({} classes, dim {}) to {}",
        records.len(),
        args.classes,
        args.dim,
        args.out.display()
    );
    if let Some(path) = &args.manifest {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(
            f,
            "{}",
            manifest_line(
                &args.out.to_string_lossy(),
                args.dim,
                records.len(),
                args.classes as u32
            )
        )?;
    }
    Ok(())
}

#[derive(Args)]
pub struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
}

pub fn inspect(args: InspectArgs) -> Result<()> {
    let mut head = [0u8; 8];
    let mut f = File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let n = f.read(&mut head)?;

    if n >= 6 && &head[..6] == b"ACMF1\0" {
        let dataset = read_feature_file(&args.input)?;
        println!("feature file      {}", args.input.display());
        println!("dim               {}", dataset.dim);
        println!("records           {}", dataset.records.len());
        println!("declared classes  {}", dataset.class_count);
        if let (Some(first), Some(last)) = (dataset.records.first(), dataset.records.last()) {
            println!("time range        {} .. {}", first.timestamp, last.timestamp);
        }
        let distinct: std::collections::BTreeSet<u32> =
            dataset.records.iter().map(|r| r.label).collect();
        println!("labels seen       {}", distinct.len());
        return Ok(());
    }
    if n >= 8 && &head == b"ACMIDX1\0" {
        let index = HnswIndex::load_file(&args.input)?;
        println!("index snapshot    {}", args.input.display());
        println!("entries           {}", index.len());
        println!("dim               {}", index.dim());
        let p = index.params();
        println!(
            "params            m={} m0={} ef_construction={} ef_search={} seed={}",
            p.m, p.m0, p.ef_construction, p.ef_search, p.rng_seed
        );
        index.validate_structure()?;
        println!("structure         valid");
        return Ok(());
    }
    if n >= 6 && &head[..6] == b"ACMW1\0" {
        let weights = acm_core::preprocess::ProjectionWeights::load_file(&args.input)?;
        println!("projection file   {}", args.input.display());
        println!("kind              {:?}", weights.kind());
        println!("map               {} -> {}", weights.in_dim(), weights.out_dim());
        return Ok(());
    }
    bail!(
        "{}: unrecognized magic bytes {:?}",
        args.input.display(),
        &head[..n.min(8)]
    );
}
