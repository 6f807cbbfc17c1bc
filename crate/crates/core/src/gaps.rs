//! Missing-sample detection, placeholder insertion and bucket classification.

use serde::{Deserialize, Serialize};

use crate::capture::{Capture, Sample, SensorKind};
use crate::error::{Error, Result};

/// Consecutive deltas above this multiple of the nominal period count as gaps.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1.5;

pub fn expected_sample_count(sensor: SensorKind, duration_s: u32) -> usize {
    duration_s as usize * sensor.one_second()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    Internal,
    Trailing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSpan {
    pub kind: GapKind,
    /// Index of the sample the placeholders follow. For trailing spans this
    /// is the last sample.
    pub insert_after_index: usize,
    pub count: usize,
    pub timestamps: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    None,
    Small,
    Medium,
    Large,
}

impl Bucket {
    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::None => "none",
            Bucket::Small => "small",
            Bucket::Medium => "medium",
            Bucket::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sensor: SensorKind,
    pub expected_count: usize,
    pub observed_count: usize,
    pub missing_count: usize,
    pub spans: Vec<GapSpan>,
    pub bucket: Bucket,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GapReport {
    /// Total placeholder rows the spans will insert. Equals `missing_count`
    /// unless internal evidence over-explains the shortfall.
    pub fn placeholder_count(&self) -> usize {
        self.spans.iter().map(|s| s.count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub bucket: Bucket,
    pub discard: bool,
}

pub fn classify_missing(missing: usize, sensor: SensorKind) -> Classification {
    let threshold = sensor.one_second();
    let quota = sensor.fill_quota();
    let bucket = match missing {
        0 => Bucket::None,
        m if m <= quota => Bucket::Small,
        m if m <= threshold => Bucket::Medium,
        _ => Bucket::Large,
    };
    Classification {
        bucket,
        discard: bucket == Bucket::Large,
    }
}

pub fn classify_capture(report: &GapReport, sensor: SensorKind) -> Classification {
    classify_missing(report.missing_count, sensor)
}

/// Diagnoses a capture of present (observed or imputed) rows.
///
/// Internal spans come from timestamp deltas larger than
/// `gap_threshold × period`; whatever part of the count shortfall they do not
/// explain becomes one trailing span after the last sample.
pub fn detect_gaps(capture: &Capture, gap_threshold: f64) -> Result<GapReport> {
    if capture.missing_count() > 0 {
        return Err(Error::UnexpectedMissingRows);
    }
    let sensor = capture.sensor;
    let period = sensor.period_ms();
    let expected = expected_sample_count(sensor, capture.duration_s);
    let observed = capture.len();
    if observed > expected {
        return Err(Error::OverComplete {
            expected,
            observed,
        });
    }
    let missing = expected - observed;

    let samples = capture.samples();
    let limit = gap_threshold * period as f64;
    let mut spans = Vec::new();
    for (i, pair) in samples.windows(2).enumerate() {
        let delta = pair[1].timestamp_ms - pair[0].timestamp_ms;
        if (delta as f64) <= limit {
            continue;
        }
        let steps = (delta as f64 / period as f64).round() as usize;
        let count = steps.saturating_sub(1);
        if count == 0 {
            continue;
        }
        spans.push(grid_span(GapKind::Internal, i, pair[0].timestamp_ms, count, period));
    }

    let internal: usize = spans.iter().map(|s| s.count).sum();
    let mut warnings = Vec::new();
    if internal > missing {
        warnings.push(format!(
            "internal gaps account for {internal} rows but the count shortfall is {missing}; \
             keeping internal evidence, no trailing span"
        ));
    } else if internal < missing {
        let last = observed - 1;
        spans.push(grid_span(
            GapKind::Trailing,
            last,
            samples[last].timestamp_ms,
            missing - internal,
            period,
        ));
    }

    Ok(GapReport {
        sensor,
        expected_count: expected,
        observed_count: observed,
        missing_count: missing,
        bucket: classify_missing(missing, sensor).bucket,
        spans,
        warnings,
    })
}

fn grid_span(kind: GapKind, after: usize, from: i64, count: usize, period: i64) -> GapSpan {
    GapSpan {
        kind,
        insert_after_index: after,
        count,
        timestamps: (1..=count as i64).map(|j| from + j * period).collect(),
    }
}

/// Inserts all-missing rows at every span's grid timestamps. Existing rows are
/// copied unchanged.
pub fn insert_placeholders(capture: &Capture, report: &GapReport) -> Result<Capture> {
    if report.observed_count != capture.len() {
        return Err(Error::ReportMismatch(format!(
            "report covers {} rows, capture has {}",
            report.observed_count,
            capture.len()
        )));
    }
    if report.spans.is_empty() {
        return Ok(capture.clone());
    }

    let samples = capture.samples();
    let mut out = Vec::with_capacity(samples.len() + report.placeholder_count());
    let mut spans = report.spans.iter().peekable();
    for (i, sample) in samples.iter().enumerate() {
        out.push(*sample);
        while let Some(span) = spans.next_if(|s| s.insert_after_index == i) {
            for &ts in &span.timestamps {
                let previous = out.last().map(|s| s.timestamp_ms).unwrap_or(i64::MIN);
                if ts <= previous {
                    return Err(Error::GridConflict {
                        timestamp: ts,
                        previous,
                    });
                }
                out.push(Sample::missing(ts));
            }
            if let Some(next) = samples.get(i + 1) {
                let last = out.last().map(|s| s.timestamp_ms).unwrap_or(i64::MIN);
                if next.timestamp_ms <= last {
                    return Err(Error::GridConflict {
                        timestamp: last,
                        previous: next.timestamp_ms,
                    });
                }
            }
        }
    }
    if spans.next().is_some() {
        return Err(Error::ReportMismatch(
            "span positions are unordered or out of range".into(),
        ));
    }
    Ok(capture.with_samples(out))
}
