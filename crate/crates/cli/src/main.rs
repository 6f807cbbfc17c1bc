//! `gapfill` command-line front end: scan, impute and eval.

use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gapfill::eval::BaselineTable;
use gapfill::pipeline::{discover_captures, read_capture};
use gapfill::{
    compare_baselines, detect_gaps, run_pipeline, scan_directory, Activity, GapMode, GapSpec, ImputationConfig,
    PipelineOptions, SensorKind, Weighting, DEFAULT_GAP_THRESHOLD,
};
use rayon::prelude::*;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "gapfill", version, about = "Detect and impute missing samples in inertial sensor captures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify every capture by missing-sample count and print the statistics table.
    Scan(ScanArgs),
    /// Impute every keepable capture and write the completed files.
    Impute(ImputeArgs),
    /// Score KNN and baseline fillers on synthetically degraded complete captures.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Input directory laid out as <activity>/<sensor>/<capture>.csv
    #[arg(long)]
    input: PathBuf,
    /// Sensor kind for files whose path does not name one; filters otherwise
    #[arg(long)]
    sensor: Option<SensorKind>,
    /// Activity for files whose path does not name one; filters otherwise
    #[arg(long)]
    activity: Option<Activity>,
    /// Capture duration in seconds
    #[arg(long = "duration-s", default_value_t = 5)]
    duration_s: u32,
    /// Delta multiple of the nominal period above which a gap is detected
    #[arg(long = "gap-threshold", default_value_t = DEFAULT_GAP_THRESHOLD)]
    gap_threshold: f64,
    /// Worker threads; 0 uses every available processor
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct Knn {
    /// Number of nearest neighbors
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Neighbor weighting: uniform or inverse-distance
    #[arg(long, default_value_t = Weighting::Uniform)]
    weighting: Weighting,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ImputeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    knn: Knn,
    /// Output directory
    #[arg(long)]
    output: PathBuf,
    /// Append an observed/imputed provenance column
    #[arg(long)]
    provenance: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    knn: Knn,
    /// Seed for random gap placement; capture i uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to remove rows: trailing, internal or random
    #[arg(long = "gap-mode", default_value = "trailing")]
    gap_mode: GapMode,
    /// Number of contiguous rows to remove
    #[arg(long = "gap-count", default_value_t = 10)]
    gap_count: usize,
    /// First removed row index for the internal mode
    #[arg(long = "gap-position", default_value_t = 0)]
    gap_position: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }

    fn processing(message: impl ToString) -> Self {
        Failure { code: EXIT_FAILURE, message: message.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("gapfill: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let common = match &cli.command {
        Command::Scan(a) => &a.common,
        Command::Impute(a) => &a.common,
        Command::Eval(a) => &a.common,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(Failure::usage)?;
    pool.install(|| match cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::Impute(args) => cmd_impute(args),
        Command::Eval(args) => cmd_eval(args),
    })
}

fn options(common: &Common, knn: Option<&Knn>, provenance: bool) -> Result<PipelineOptions, Failure> {
    let defaults = ImputationConfig::default();
    let config = ImputationConfig {
        k: knn.map_or(defaults.k, |k| k.k),
        weighting: knn.map_or(defaults.weighting, |k| k.weighting),
        gap_threshold: common.gap_threshold,
    };
    config.validate().map_err(Failure::usage)?;
    if !common.input.is_dir() {
        return Err(Failure::usage(format!("input directory {} does not exist", common.input.display())));
    }
    Ok(PipelineOptions {
        config,
        duration_s: common.duration_s,
        sensor: common.sensor,
        activity: common.activity,
        provenance,
    })
}

fn cmd_scan(args: ScanArgs) -> Result<u8, Failure> {
    let opts = options(&args.common, None, false)?;
    let scan = scan_directory(&args.common.input, &opts).map_err(Failure::usage)?;
    let mut out = String::new();
    for record in &scan.records {
        let _ = writeln!(out, "{}", record.to_json());
    }
    if !scan.records.is_empty() {
        out.push('\n');
    }
    out.push_str(&scan.stats.render_table());
    emit(&out)?;
    for f in &scan.failures {
        eprintln!("gapfill: failed {}: {}", f.path, f.error);
    }
    Ok(if scan.stats.failed > 0 { EXIT_FAILURE } else { 0 })
}

fn cmd_impute(args: ImputeArgs) -> Result<u8, Failure> {
    let opts = options(&args.common, Some(&args.knn), args.provenance)?;
    let summary = run_pipeline(&args.common.input, &args.output, &opts).map_err(Failure::processing)?;
    emit(&summary.render())?;
    Ok(if summary.has_failures() { EXIT_FAILURE } else { 0 })
}

fn cmd_eval(args: EvalArgs) -> Result<u8, Failure> {
    let opts = options(&args.common, Some(&args.knn), false)?;
    let input: &Path = &args.common.input;
    let sources = discover_captures(input, &opts).map_err(Failure::usage)?;

    let complete: Vec<_> = sources
        .into_iter()
        .filter_map(|src| {
            let (activity, sensor) = src.labels.ok()?;
            let capture = read_capture(&src.path, activity, sensor, opts.duration_s).ok()?;
            let report = detect_gaps(&capture, opts.config.gap_threshold).ok()?;
            (report.missing_count == 0 && report.spans.is_empty()).then_some((src.relative, capture))
        })
        .collect();
    if complete.is_empty() {
        return Err(Failure::processing(format!("no complete captures found under {}", input.display())));
    }

    let tables: Vec<Result<String, Failure>> = complete
        .par_iter()
        .enumerate()
        .map(|(i, (path, capture))| {
            let spec = GapSpec {
                mode: args.gap_mode,
                count: args.gap_count,
                position: args.gap_position,
                seed: args.seed.wrapping_add(i as u64),
            };
            compare_baselines(capture, &spec, &opts.config)
                .map(|t| t.render_rows(Some(path)))
                .map_err(|e| Failure::processing(format!("{path}: {e}")))
        })
        .collect();

    let mut out = format!("path,{}\n", BaselineTable::HEADER);
    let mut failed = false;
    for table in tables {
        match table {
            Ok(rows) => out.push_str(&rows),
            Err(f) => {
                eprintln!("gapfill: {}", f.message);
                failed = true;
            }
        }
    }
    emit(&out)?;
    Ok(if failed { EXIT_FAILURE } else { 0 })
}

/// Write to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::processing(format!("writing output: {e}"))),
        _ => Ok(()),
    }
}
