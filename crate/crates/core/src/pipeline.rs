//! End-to-end imputation: detect, insert placeholders, then window-and-fill
//! until no missing rows remain. Also dataset scanning and the directory
//! batch runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::capture::{parse_capture, serialize_capture, Activity, Capture, Sample, SensorKind, WriteOptions};
use crate::error::{Error, Result};
use crate::gaps::{classify_capture, detect_gaps, insert_placeholders, Bucket, GapReport};
use crate::knn::{impute_chunk, ImputationConfig};
use crate::segment::next_chunk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    Discarded,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Discarded => "discarded",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassRecord {
    /// Half-open capture index range spanned by the window.
    pub chunk_start: usize,
    pub chunk_end: usize,
    pub filled: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationLog {
    pub passes: usize,
    pub records: Vec<PassRecord>,
    pub report: Option<GapReport>,
    pub status: Status,
    pub error: Option<String>,
    pub config: ImputationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationOutcome {
    pub capture: Capture,
    pub log: ImputationLog,
}

/// Runs the window/fill loop over a capture that already holds placeholder
/// rows. Rows filled in one pass become eligible neighbors in the next.
pub fn fill_missing(capture: &Capture, config: &ImputationConfig) -> Result<(Capture, Vec<PassRecord>)> {
    config.validate()?;
    let mut working = capture.clone();
    let mut records = Vec::new();
    loop {
        let (record, filled) = {
            let Some(chunk) = next_chunk(&working)? else {
                break;
            };
            let filled = impute_chunk(&chunk, config)?;
            let record = PassRecord {
                chunk_start: chunk.capture_offset(),
                chunk_end: chunk.capture_end(),
                filled: chunk.target_indices().to_vec(),
            };
            (record, filled)
        };
        let rows = working.samples_mut();
        for row in filled {
            rows[row.index] = Sample::imputed(rows[row.index].timestamp_ms, row.values);
        }
        records.push(record);
    }
    Ok((working, records))
}

/// Imputes one capture. Errors never escape: they become a `failed` log with
/// the input returned untouched.
pub fn impute_capture(capture: &Capture, config: &ImputationConfig) -> ImputationOutcome {
    let mut log = ImputationLog {
        passes: 0,
        records: Vec::new(),
        report: None,
        status: Status::Failed,
        error: None,
        config: *config,
    };

    let result = (|| -> Result<Option<Capture>> {
        config.validate()?;
        let report = detect_gaps(capture, config.gap_threshold)?;
        let class = classify_capture(&report, capture.sensor);
        log.report = Some(report.clone());
        if class.discard {
            return Ok(None);
        }
        let padded = insert_placeholders(capture, &report)?;
        let (filled, records) = fill_missing(&padded, config)?;
        log.passes = records.len();
        log.records = records;
        Ok(Some(filled))
    })();

    match result {
        Ok(Some(filled)) => {
            log.status = Status::Complete;
            ImputationOutcome {
                capture: filled,
                log,
            }
        }
        Ok(None) => {
            log.status = Status::Discarded;
            ImputationOutcome {
                capture: capture.clone(),
                log,
            }
        }
        Err(e) => {
            log.status = Status::Failed;
            log.error = Some(e.to_string());
            ImputationOutcome {
                capture: capture.clone(),
                log,
            }
        }
    }
}

/// Per (activity, sensor) record counts in the shape of the missing-samples
/// statistics table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub total: usize,
    pub complete: usize,
    pub small: usize,
    pub medium: usize,
    pub large: usize,
}

impl BucketCounts {
    fn add(&mut self, bucket: Bucket) {
        self.total += 1;
        match bucket {
            Bucket::None => self.complete += 1,
            Bucket::Small => self.small += 1,
            Bucket::Medium => self.medium += 1,
            Bucket::Large => self.large += 1,
        }
    }

    fn merge(&mut self, other: &BucketCounts) {
        self.total += other.total;
        self.complete += other.complete;
        self.small += other.small;
        self.medium += other.medium;
        self.large += other.large;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub rows: BTreeMap<(Activity, SensorKind), BucketCounts>,
    pub failed: usize,
}

impl DatasetStats {
    pub fn record(&mut self, activity: Activity, sensor: SensorKind, bucket: Bucket) {
        self.rows.entry((activity, sensor)).or_default().add(bucket);
    }

    pub fn merge(mut self, other: DatasetStats) -> DatasetStats {
        for (key, counts) in other.rows {
            self.rows.entry(key).or_default().merge(&counts);
        }
        self.failed += other.failed;
        self
    }

    pub fn get(&self, activity: Activity, sensor: SensorKind) -> BucketCounts {
        self.rows.get(&(activity, sensor)).copied().unwrap_or_default()
    }

    pub fn totals(&self) -> BucketCounts {
        let mut all = BucketCounts::default();
        for counts in self.rows.values() {
            all.merge(counts);
        }
        all
    }

    /// Tab-separated table: one row per (activity, sensor) with a trailing
    /// failed tally. Bucket bounds scale with the sensor rate: small is at
    /// most a tenth of a second of samples, large is over one second.
    pub fn render_table(&self) -> String {
        let mut out = String::from("activity\tsensor\ttotal_records\tcomplete\tsmall\tmedium\tlarge\n");
        for ((activity, sensor), c) in &self.rows {
            let _ = writeln!(
                out,
                "{activity}\t{sensor}\t{}\t{}\t{}\t{}\t{}",
                c.total, c.complete, c.small, c.medium, c.large
            );
        }
        let t = self.totals();
        let _ = writeln!(
            out,
            "all\tall\t{}\t{}\t{}\t{}\t{}",
            t.total, t.complete, t.small, t.medium, t.large
        );
        let _ = writeln!(out, "failed\t{}", self.failed);
        out
    }
}

/// One capture handed to [`scan_dataset`]. Read or parse failures travel in
/// `capture` so they are tallied rather than dropped.
#[derive(Debug)]
pub struct ScanItem {
    pub path: String,
    pub activity: Activity,
    pub sensor: SensorKind,
    pub capture: Result<Capture>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub path: String,
    pub activity: Activity,
    pub sensor: SensorKind,
    pub expected: usize,
    pub observed: usize,
    pub missing: usize,
    pub bucket: Bucket,
    pub spans: Vec<crate::gaps::GapSpan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GapRecord {
    pub fn new(path: &str, activity: Activity, report: GapReport) -> Self {
        GapRecord {
            path: path.to_string(),
            activity,
            sensor: report.sensor,
            expected: report.expected_count,
            observed: report.observed_count,
            missing: report.missing_count,
            bucket: report.bucket,
            spans: report.spans,
            warnings: report.warnings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gap records always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetScan {
    pub stats: DatasetStats,
    pub records: Vec<GapRecord>,
    pub failures: Vec<ScanFailure>,
}

impl DatasetScan {
    pub fn merge(mut self, other: DatasetScan) -> DatasetScan {
        self.stats = self.stats.merge(other.stats);
        self.records.extend(other.records);
        self.failures.extend(other.failures);
        self.records.sort_by(|a, b| a.path.cmp(&b.path));
        self.failures.sort_by(|a, b| a.path.cmp(&b.path));
        self
    }

    fn fail(&mut self, path: &str, error: impl ToString) {
        self.stats.failed += 1;
        self.failures.push(ScanFailure {
            path: path.to_string(),
            error: error.to_string(),
        });
    }
}

/// Classifies every capture and tallies buckets per (activity, sensor).
pub fn scan_dataset<I>(items: I, gap_threshold: f64) -> DatasetScan
where
    I: IntoIterator<Item = ScanItem>,
{
    let mut scan = DatasetScan::default();
    for item in items {
        let report = item
            .capture
            .and_then(|c| detect_gaps(&c, gap_threshold));
        match report {
            Ok(report) => {
                scan.stats.record(item.activity, item.sensor, report.bucket);
                scan.records.push(GapRecord::new(&item.path, item.activity, report));
            }
            Err(e) => scan.fail(&item.path, e),
        }
    }
    scan.records.sort_by(|a, b| a.path.cmp(&b.path));
    scan.failures.sort_by(|a, b| a.path.cmp(&b.path));
    scan
}

/// How capture files are located and labelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub config: ImputationConfig,
    pub duration_s: u32,
    /// Used when the directory layout names no sensor; filters otherwise.
    pub sensor: Option<SensorKind>,
    /// Used when the directory layout names no activity; filters otherwise.
    pub activity: Option<Activity>,
    pub provenance: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            config: ImputationConfig::default(),
            duration_s: 5,
            sensor: None,
            activity: None,
            provenance: false,
        }
    }
}

/// A capture file found under an input root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureSource {
    pub path: PathBuf,
    /// Path relative to the input root, `/`-separated.
    pub relative: String,
    pub labels: std::result::Result<(Activity, SensorKind), String>,
}

/// Lists capture files under `root` in path order. The expected layout is
/// `<activity>/<sensor>/<capture-id>.csv`; explicit options fill in labels the
/// layout lacks and drop files whose layout labels disagree with them.
pub fn discover_captures(root: &Path, options: &PipelineOptions) -> Result<Vec<CaptureSource>> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a directory"),
        ));
    }

    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() || entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        let relative_path = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let parts: Vec<String> = relative_path
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let relative = parts.join("/");

        let dirs = &parts[..parts.len() - 1];
        let layout_sensor = dirs.last().and_then(|d| d.parse::<SensorKind>().ok());
        let layout_activity = dirs
            .len()
            .checked_sub(2)
            .and_then(|i| dirs[i].parse::<Activity>().ok())
            .or_else(|| {
                // `<activity>/<file>` when the sensor comes from a flag
                if layout_sensor.is_none() {
                    dirs.last().and_then(|d| d.parse::<Activity>().ok())
                } else {
                    None
                }
            });

        if let (Some(want), Some(have)) = (options.sensor, layout_sensor) {
            if want != have {
                continue;
            }
        }
        if let (Some(want), Some(have)) = (options.activity, layout_activity) {
            if want != have {
                continue;
            }
        }

        let sensor = layout_sensor.or(options.sensor);
        let activity = layout_activity.or(options.activity);
        let labels = match (activity, sensor) {
            (Some(a), Some(s)) => Ok((a, s)),
            (None, _) => Err(Error::UnknownLayout {
                path: relative_path.to_path_buf(),
                what: "activity",
            }
            .to_string()),
            (_, None) => Err(Error::UnknownLayout {
                path: relative_path.to_path_buf(),
                what: "sensor",
            }
            .to_string()),
        };
        out.push(CaptureSource {
            path: entry.path().to_path_buf(),
            relative,
            labels,
        });
    }
    Ok(out)
}

pub fn read_capture(path: &Path, activity: Activity, sensor: SensorKind, duration_s: u32) -> Result<Capture> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_capture(&text, sensor, activity, duration_s)
}

/// Reads and classifies every capture under `root`.
pub fn scan_directory(root: &Path, options: &PipelineOptions) -> Result<DatasetScan> {
    let sources = discover_captures(root, options)?;
    let threshold = options.config.gap_threshold;
    let partials: Vec<DatasetScan> = sources
        .par_iter()
        .map(|src| match &src.labels {
            Ok((activity, sensor)) => {
                let item = ScanItem {
                    path: src.relative.clone(),
                    activity: *activity,
                    sensor: *sensor,
                    capture: read_capture(&src.path, *activity, *sensor, options.duration_s),
                };
                scan_dataset([item], threshold)
            }
            Err(msg) => {
                let mut scan = DatasetScan::default();
                scan.fail(&src.relative, msg);
                scan
            }
        })
        .collect();
    Ok(partials.into_iter().fold(DatasetScan::default(), DatasetScan::merge))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub path: String,
    pub status: Status,
    pub bucket: Option<Bucket>,
    pub missing_before: Option<usize>,
    pub missing_after: Option<usize>,
    pub passes: usize,
    pub error: Option<String>,
}

impl CaptureSummary {
    fn failed(path: &str, error: impl ToString) -> Self {
        CaptureSummary {
            path: path.to_string(),
            status: Status::Failed,
            bucket: None,
            missing_before: None,
            missing_after: None,
            passes: 0,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub captures: Vec<CaptureSummary>,
    pub stats_before: DatasetStats,
    pub stats_after: DatasetStats,
}

impl PipelineSummary {
    pub fn has_failures(&self) -> bool {
        self.captures.iter().any(|c| c.status == Status::Failed)
    }

    pub fn count(&self, status: Status) -> usize {
        self.captures.iter().filter(|c| c.status == status).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.captures {
            let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |n| n.to_string());
            let _ = write!(
                out,
                "{} status: {} bucket: {} missing_before: {} missing_after: {} passes: {}",
                c.path,
                c.status.as_str(),
                c.bucket.map_or("-", Bucket::as_str),
                opt(c.missing_before),
                opt(c.missing_after),
                c.passes
            );
            if let Some(e) = &c.error {
                let _ = write!(out, " error: {e}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\ncomplete: {} discarded: {} failed: {}",
            self.count(Status::Complete),
            self.count(Status::Discarded),
            self.count(Status::Failed)
        );
        out.push_str("\nbefore\n");
        out.push_str(&self.stats_before.render_table());
        out.push_str("\nafter\n");
        out.push_str(&self.stats_after.render_table());
        out
    }
}

/// Imputes every capture under `input` and writes the completed ones to the
/// same relative path under `output`. Discarded and failed captures are listed
/// in the summary only.
pub fn run_pipeline(input: &Path, output: &Path, options: &PipelineOptions) -> Result<PipelineSummary> {
    options.config.validate()?;
    let sources = discover_captures(input, options)?;
    fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;

    struct Outcome {
        summary: CaptureSummary,
        before: DatasetStats,
        after: DatasetStats,
    }

    let outcomes: Vec<Outcome> = sources
        .par_iter()
        .map(|src| {
            let mut before = DatasetStats::default();
            let mut after = DatasetStats::default();
            let (activity, sensor) = match &src.labels {
                Ok(labels) => *labels,
                Err(msg) => {
                    before.failed += 1;
                    return Outcome {
                        summary: CaptureSummary::failed(&src.relative, msg),
                        before,
                        after,
                    };
                }
            };
            let capture = match read_capture(&src.path, activity, sensor, options.duration_s) {
                Ok(c) => c,
                Err(e) => {
                    before.failed += 1;
                    return Outcome {
                        summary: CaptureSummary::failed(&src.relative, e),
                        before,
                        after,
                    };
                }
            };

            let outcome = impute_capture(&capture, &options.config);
            let log = outcome.log;
            match &log.report {
                Some(r) => before.record(activity, sensor, r.bucket),
                None => before.failed += 1,
            }
            let mut summary = CaptureSummary {
                path: src.relative.clone(),
                status: log.status,
                bucket: log.report.as_ref().map(|r| r.bucket),
                missing_before: log.report.as_ref().map(|r| r.missing_count),
                missing_after: None,
                passes: log.passes,
                error: log.error.clone(),
            };

            if log.status == Status::Complete {
                let target = output.join(&src.relative);
                let written = write_capture(&target, &outcome.capture, options.provenance).and_then(|()| {
                    let back = read_capture(&target, activity, sensor, options.duration_s)?;
                    detect_gaps(&back, options.config.gap_threshold)
                });
                match written {
                    Ok(report) => {
                        after.record(activity, sensor, report.bucket);
                        summary.missing_after = Some(report.missing_count);
                    }
                    Err(e) => {
                        after.failed += 1;
                        summary.status = Status::Failed;
                        summary.error = Some(e.to_string());
                    }
                }
            }
            Outcome {
                summary,
                before,
                after,
            }
        })
        .collect();

    let mut summary = PipelineSummary {
        captures: Vec::with_capacity(outcomes.len()),
        stats_before: DatasetStats::default(),
        stats_after: DatasetStats::default(),
    };
    for o in outcomes {
        summary.captures.push(o.summary);
        summary.stats_before = std::mem::take(&mut summary.stats_before).merge(o.before);
        summary.stats_after = std::mem::take(&mut summary.stats_after).merge(o.after);
    }
    summary.captures.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(summary)
}

fn write_capture(path: &Path, capture: &Capture, provenance: bool) -> Result<()> {
    let text = serialize_capture(
        capture,
        WriteOptions {
            provenance,
            allow_missing: false,
        },
    )?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
