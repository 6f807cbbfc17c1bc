//! Reconstruction scoring by synthetic gap injection.
//!
//! A complete capture loses a contiguous block of rows, each filler
//! reconstructs them at the original timestamps, and the result is scored
//! against the removed rows.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capture::{Capture, Sample};
use crate::error::{Error, Result};
use crate::knn::ImputationConfig;
use crate::pipeline::fill_missing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    Trailing,
    InternalAt,
    Random,
}

impl FromStr for GapMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "trailing" => Ok(GapMode::Trailing),
            "internal" | "internal-at" => Ok(GapMode::InternalAt),
            "random" => Ok(GapMode::Random),
            other => Err(format!("unknown gap mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSpec {
    pub mode: GapMode,
    pub count: usize,
    /// First removed index for `InternalAt`.
    pub position: usize,
    /// Seed for `Random`.
    pub seed: u64,
}

impl GapSpec {
    pub fn trailing(count: usize) -> Self {
        GapSpec { mode: GapMode::Trailing, count, position: 0, seed: 0 }
    }

    pub fn internal_at(position: usize, count: usize) -> Self {
        GapSpec { mode: GapMode::InternalAt, count, position, seed: 0 }
    }

    pub fn random(count: usize, seed: u64) -> Self {
        GapSpec { mode: GapMode::Random, count, position: 0, seed }
    }
}

/// A capture with a block of rows removed, plus those rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedGap {
    pub degraded: Capture,
    pub truth: Vec<Sample>,
    /// Index in the original capture of the first removed row.
    pub start: usize,
}

impl InjectedGap {
    /// Puts the removed rows back.
    pub fn restore(&self) -> Capture {
        let mut samples = self.degraded.samples().to_vec();
        samples.splice(self.start..self.start, self.truth.iter().copied());
        self.degraded.with_samples(samples)
    }

    /// The degraded capture with all-missing rows at the removed timestamps.
    pub fn with_placeholders(&self) -> Capture {
        let mut samples = self.degraded.samples().to_vec();
        samples.splice(
            self.start..self.start,
            self.truth.iter().map(|s| Sample::missing(s.timestamp_ms)),
        );
        self.degraded.with_samples(samples)
    }
}

pub fn inject_gaps(capture: &Capture, spec: &GapSpec) -> Result<InjectedGap> {
    if capture.missing_count() > 0 {
        return Err(Error::InvalidGapSpec("capture already has missing rows".into()));
    }
    let len = capture.len();
    if spec.count == 0 || spec.count + 1 > len {
        return Err(Error::InvalidGapSpec(format!(
            "count must be between 1 and {} for a {len}-row capture, got {}",
            len.saturating_sub(1),
            spec.count
        )));
    }
    let start = match spec.mode {
        GapMode::Trailing => len - spec.count,
        GapMode::InternalAt => {
            if spec.position + spec.count > len {
                return Err(Error::InvalidGapSpec(format!(
                    "rows {}..{} exceed a {len}-row capture",
                    spec.position,
                    spec.position + spec.count
                )));
            }
            spec.position
        }
        GapMode::Random => ChaCha8Rng::seed_from_u64(spec.seed).gen_range(0..=len - spec.count),
    };
    let mut samples = capture.samples().to_vec();
    let truth: Vec<Sample> = samples.drain(start..start + spec.count).collect();
    Ok(InjectedGap {
        degraded: capture.with_samples(samples),
        truth,
        start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rmse: [f64; 3],
    pub mae: [f64; 3],
    /// Peak-to-peak of the reconstruction over that of the truth; `None`
    /// when the truth is flat.
    pub amplitude_ratio: [Option<f64>; 3],
    pub n_scored: usize,
}

/// Scores the rows of `imputed` at the ground-truth timestamps.
pub fn score(imputed: &Capture, truth: &[Sample]) -> Result<ScoreReport> {
    let samples = imputed.samples();
    let mut pairs = Vec::with_capacity(truth.len());
    for t in truth {
        let expected = t
            .values()
            .ok_or(Error::InvalidGapSpec("ground truth row has no values".into()))?;
        let got = samples
            .binary_search_by_key(&t.timestamp_ms, |s| s.timestamp_ms)
            .ok()
            .and_then(|i| samples[i].values())
            .ok_or(Error::TimestampMismatch { timestamp: t.timestamp_ms })?;
        pairs.push((got, expected));
    }

    let n = pairs.len();
    let mut report = ScoreReport {
        rmse: [0.0; 3],
        mae: [0.0; 3],
        amplitude_ratio: [None; 3],
        n_scored: n,
    };
    if n == 0 {
        return Ok(report);
    }
    for axis in 0..3 {
        let (mut sq, mut abs) = (0.0, 0.0);
        for (got, want) in &pairs {
            let e = got[axis] - want[axis];
            sq += e * e;
            abs += e.abs();
        }
        report.rmse[axis] = (sq / n as f64).sqrt();
        report.mae[axis] = abs / n as f64;
        let truth_ptp = peak_to_peak(pairs.iter().map(|(_, w)| w[axis]));
        let got_ptp = peak_to_peak(pairs.iter().map(|(g, _)| g[axis]));
        report.amplitude_ratio[axis] = (truth_ptp > 0.0).then(|| got_ptp / truth_ptp);
    }
    Ok(report)
}

fn peak_to_peak(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Knn,
    LinearInterpolation,
    LastObservationCarriedForward,
    GlobalMean,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Knn,
        Method::LinearInterpolation,
        Method::LastObservationCarriedForward,
        Method::GlobalMean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::LinearInterpolation => "linear_interpolation",
            Method::LastObservationCarriedForward => "last_observation_carried_forward",
            Method::GlobalMean => "global_mean",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fills every missing row of `capture` with `method`.
pub fn fill_with(method: Method, capture: &Capture, config: &ImputationConfig) -> Result<Capture> {
    match method {
        Method::Knn => fill_missing(capture, config).map(|(c, _)| c),
        Method::LinearInterpolation => fill_each(capture, linear_fill),
        Method::LastObservationCarriedForward => fill_each(capture, locf_fill),
        Method::GlobalMean => {
            let known: Vec<[f64; 3]> = capture.samples().iter().filter_map(Sample::values).collect();
            if known.is_empty() {
                return Err(Error::NoNeighbors);
            }
            let mut mean = [0.0; 3];
            for (axis, slot) in mean.iter_mut().enumerate() {
                let column = known.iter().map(|v| v[axis]);
                let (lo, hi) = column.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                *slot = (column.sum::<f64>() / known.len() as f64).clamp(lo, hi);
            }
            fill_each(capture, |_, _, _| Some(mean))
        }
    }
}

type Neighbor = Option<(i64, [f64; 3])>;

fn fill_each(capture: &Capture, rule: impl Fn(i64, Neighbor, Neighbor) -> Option<[f64; 3]>) -> Result<Capture> {
    let samples = capture.samples();
    let mut prev: Vec<Neighbor> = Vec::with_capacity(samples.len());
    let mut last = None;
    for s in samples {
        prev.push(last);
        if let Some(v) = s.values() {
            last = Some((s.timestamp_ms, v));
        }
    }
    let mut next: Vec<Neighbor> = vec![None; samples.len()];
    let mut upcoming = None;
    for (i, s) in samples.iter().enumerate().rev() {
        next[i] = upcoming;
        if let Some(v) = s.values() {
            upcoming = Some((s.timestamp_ms, v));
        }
    }

    let mut out = samples.to_vec();
    for (i, s) in samples.iter().enumerate() {
        if s.is_missing() {
            let v = rule(s.timestamp_ms, prev[i], next[i]).ok_or(Error::NoNeighbors)?;
            out[i] = Sample::imputed(s.timestamp_ms, v);
        }
    }
    Ok(capture.with_samples(out))
}

fn linear_fill(t: i64, before: Neighbor, after: Neighbor) -> Option<[f64; 3]> {
    match (before, after) {
        (Some((t0, a)), Some((t1, b))) => {
            let f = (t - t0) as f64 / (t1 - t0) as f64;
            Some(std::array::from_fn(|i| a[i] + (b[i] - a[i]) * f))
        }
        (Some((_, v)), None) | (None, Some((_, v))) => Some(v),
        (None, None) => None,
    }
}

fn locf_fill(_: i64, before: Neighbor, after: Neighbor) -> Option<[f64; 3]> {
    before.or(after).map(|(_, v)| v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub rows: Vec<(Method, ScoreReport)>,
}

impl BaselineTable {
    pub fn get(&self, method: Method) -> Option<&ScoreReport> {
        self.rows.iter().find(|(m, _)| *m == method).map(|(_, r)| r)
    }

    /// Delimited metrics, one line per method and axis. A non-empty `label`
    /// is prepended as a leading column.
    pub fn render_rows(&self, label: Option<&str>) -> String {
        let mut out = String::new();
        for (method, r) in &self.rows {
            for (axis, name) in ["x", "y", "z"].iter().enumerate() {
                if let Some(l) = label {
                    let _ = write!(out, "{l},");
                }
                let ratio = r.amplitude_ratio[axis].map_or_else(|| "undefined".to_string(), |v| v.to_string());
                let _ = writeln!(
                    out,
                    "{method},{name},{},{},{ratio},{}",
                    r.rmse[axis], r.mae[axis], r.n_scored
                );
            }
        }
        out
    }

    pub const HEADER: &'static str = "method,axis,rmse,mae,amplitude_ratio,n_scored";
}

/// Injects one gap and scores every method against the same truth.
pub fn compare_baselines(capture: &Capture, spec: &GapSpec, config: &ImputationConfig) -> Result<BaselineTable> {
    config.validate()?;
    let gap = inject_gaps(capture, spec)?;
    let padded = gap.with_placeholders();
    let rows = Method::ALL
        .iter()
        .map(|&m| {
            let filled = fill_with(m, &padded, config)?;
            Ok((m, score(&filled, &gap.truth)?))
        })
        .collect::<Result<_>>()?;
    Ok(BaselineTable { rows })
}
