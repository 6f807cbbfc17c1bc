//! Capture data model and the delimited row format.
//!
//! A capture file holds one row per sample: `seq,timestamp_ms,x,y,z` with an
//! optional trailing provenance column. Tabs are accepted in place of commas
//! and a header line is optional. Missing axes are written as `Null`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Accelerometer,
    Gyroscope,
    Magnetometer,
}

impl SensorKind {
    pub const ALL: [SensorKind; 3] = [
        SensorKind::Accelerometer,
        SensorKind::Gyroscope,
        SensorKind::Magnetometer,
    ];

    pub fn rate_hz(self) -> u32 {
        match self {
            SensorKind::Accelerometer | SensorKind::Gyroscope => 100,
            SensorKind::Magnetometer => 10,
        }
    }

    pub fn period_ms(self) -> i64 {
        1000 / i64::from(self.rate_hz())
    }

    /// One second of samples. Doubles as the discard threshold and the
    /// imputation window length.
    pub fn one_second(self) -> usize {
        self.rate_hz() as usize
    }

    /// Maximum number of rows filled per imputation pass (a tenth of a second).
    pub fn fill_quota(self) -> usize {
        (self.one_second() / 10).max(1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::Accelerometer => "accelerometer",
            SensorKind::Gyroscope => "gyroscope",
            SensorKind::Magnetometer => "magnetometer",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accelerometer" | "acc" => Ok(SensorKind::Accelerometer),
            "gyroscope" | "gyro" => Ok(SensorKind::Gyroscope),
            "magnetometer" | "mag" => Ok(SensorKind::Magnetometer),
            other => Err(format!("unknown sensor `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Walking,
    Running,
    Standing,
    MovingUpstairs,
    MovingDownstairs,
}

impl Activity {
    pub const ALL: [Activity; 5] = [
        Activity::Walking,
        Activity::Running,
        Activity::Standing,
        Activity::MovingUpstairs,
        Activity::MovingDownstairs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Walking => "walking",
            Activity::Running => "running",
            Activity::Standing => "standing",
            Activity::MovingUpstairs => "moving_upstairs",
            Activity::MovingDownstairs => "moving_downstairs",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '-' || c == ' ' { '_' } else { c })
            .collect();
        match norm.as_str() {
            "walking" => Ok(Activity::Walking),
            "running" => Ok(Activity::Running),
            "standing" => Ok(Activity::Standing),
            "moving_upstairs" | "upstairs" | "going_upstairs" => Ok(Activity::MovingUpstairs),
            "moving_downstairs" | "downstairs" | "going_downstairs" => {
                Ok(Activity::MovingDownstairs)
            }
            other => Err(format!("unknown activity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisState {
    Observed,
    Missing,
    Imputed,
}

impl AxisState {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisState::Observed => "observed",
            AxisState::Missing => "missing",
            AxisState::Imputed => "imputed",
        }
    }
}

/// One axis reading. A value is present unless the axis is missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Observed(f64),
    Imputed(f64),
    Missing,
}

impl AxisValue {
    pub fn state(self) -> AxisState {
        match self {
            AxisValue::Observed(_) => AxisState::Observed,
            AxisValue::Imputed(_) => AxisState::Imputed,
            AxisValue::Missing => AxisState::Missing,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            AxisValue::Observed(v) | AxisValue::Imputed(v) => Some(v),
            AxisValue::Missing => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub timestamp_ms: i64,
    pub x: AxisValue,
    pub y: AxisValue,
    pub z: AxisValue,
}

impl Sample {
    pub fn observed(timestamp_ms: i64, [x, y, z]: [f64; 3]) -> Self {
        Sample {
            timestamp_ms,
            x: AxisValue::Observed(x),
            y: AxisValue::Observed(y),
            z: AxisValue::Observed(z),
        }
    }

    pub fn imputed(timestamp_ms: i64, [x, y, z]: [f64; 3]) -> Self {
        Sample {
            timestamp_ms,
            x: AxisValue::Imputed(x),
            y: AxisValue::Imputed(y),
            z: AxisValue::Imputed(z),
        }
    }

    pub fn missing(timestamp_ms: i64) -> Self {
        Sample {
            timestamp_ms,
            x: AxisValue::Missing,
            y: AxisValue::Missing,
            z: AxisValue::Missing,
        }
    }

    /// The shared state of all three axes, or `None` for a mixed row.
    pub fn state(&self) -> Option<AxisState> {
        let s = self.x.state();
        (self.y.state() == s && self.z.state() == s).then_some(s)
    }

    pub fn is_missing(&self) -> bool {
        self.state() == Some(AxisState::Missing)
    }

    /// Observed or imputed in a way usable as a neighbor.
    pub fn is_known(&self) -> bool {
        self.values().is_some()
    }

    pub fn values(&self) -> Option<[f64; 3]> {
        Some([self.x.value()?, self.y.value()?, self.z.value()?])
    }
}

/// One fixed-duration recording of one sensor during one activity.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub activity: Activity,
    pub sensor: SensorKind,
    pub duration_s: u32,
    samples: Vec<Sample>,
}

impl Capture {
    /// Builds a capture, enforcing non-empty samples with strictly increasing
    /// timestamps.
    pub fn new(
        activity: Activity,
        sensor: SensorKind,
        duration_s: u32,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = samples
            .windows(2)
            .position(|w| w[1].timestamp_ms <= w[0].timestamp_ms)
        {
            return Err(Error::NonIncreasingTimestamp {
                line: i + 2,
                previous: samples[i].timestamp_ms,
                current: samples[i + 1].timestamp_ms,
            });
        }
        if let Some(i) = samples.iter().position(|s| s.state().is_none()) {
            return Err(Error::MixedRow { line: i + 1 });
        }
        Ok(Capture {
            activity,
            sensor,
            duration_s,
            samples,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_missing()).count()
    }

    pub fn count_state(&self, state: AxisState) -> usize {
        self.samples
            .iter()
            .filter(|s| s.state() == Some(state))
            .count()
    }

    /// Replaces the sample list. Callers inside the crate uphold the
    /// ordering invariant.
    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Capture {
        debug_assert!(samples
            .windows(2)
            .all(|w| w[0].timestamp_ms < w[1].timestamp_ms));
        Capture {
            activity: self.activity,
            sensor: self.sensor,
            duration_s: self.duration_s,
            samples,
        }
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Sample] {
        &mut self.samples
    }
}

/// Output switches for [`serialize_capture`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteOptions {
    /// Append an `observed` / `imputed` column.
    pub provenance: bool,
    /// Emit placeholder rows as `Null` instead of refusing. Debug output only.
    pub allow_missing: bool,
}

const NULL_TOKEN: &str = "Null";

/// Parses a capture file. Rows keep file order; nothing is reordered or
/// dropped. A trailing provenance column, when present, restores the
/// imputed state of rows written by [`serialize_capture`].
pub fn parse_capture(
    text: &str,
    sensor: SensorKind,
    activity: Activity,
    duration_s: u32,
) -> Result<Capture> {
    let mut samples: Vec<Sample> = Vec::new();
    let mut first_content = true;
    let mut width: Option<usize> = None;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else {
            line.split(',').map(str::trim).collect()
        };

        if first_content {
            first_content = false;
            if fields.iter().all(|f| f.parse::<f64>().is_err()) {
                continue; // header
            }
        }

        let provenance = match fields.last().map(|f| f.to_ascii_lowercase()) {
            Some(p) if p == "observed" => Some(AxisState::Observed),
            Some(p) if p == "imputed" => Some(AxisState::Imputed),
            Some(p) if p == "missing" => Some(AxisState::Missing),
            _ => None,
        };
        if provenance.is_some() {
            fields.pop();
        }

        match width {
            Some(w) if w != fields.len() => {
                return Err(Error::malformed(
                    line_no,
                    format!("expected {w} fields like the first row, found {}", fields.len()),
                ))
            }
            _ => width = Some(fields.len()),
        }
        let (ts_field, axes) = match fields.len() {
            4 => (fields[0], &fields[1..]),
            // leading sequence number is regenerated on output, never trusted
            5 => (fields[1], &fields[2..]),
            n => {
                return Err(Error::malformed(
                    line_no,
                    format!("expected 4 or 5 fields before provenance, found {n}"),
                ))
            }
        };

        let timestamp_ms = parse_timestamp(ts_field, line_no)?;
        let mut values = [None; 3];
        for (slot, field) in values.iter_mut().zip(axes) {
            *slot = parse_axis(field, line_no)?;
        }

        let sample = match (values, provenance) {
            ([Some(x), Some(y), Some(z)], None | Some(AxisState::Observed)) => {
                Sample::observed(timestamp_ms, [x, y, z])
            }
            ([Some(x), Some(y), Some(z)], Some(AxisState::Imputed)) => {
                Sample::imputed(timestamp_ms, [x, y, z])
            }
            ([None, None, None], None | Some(AxisState::Missing)) => Sample::missing(timestamp_ms),
            ([None, None, None], Some(_)) | ([Some(_), Some(_), Some(_)], Some(_)) => {
                return Err(Error::malformed(
                    line_no,
                    "provenance column contradicts axis values",
                ))
            }
            _ => return Err(Error::MixedRow { line: line_no }),
        };

        if let Some(prev) = samples.last() {
            if sample.timestamp_ms <= prev.timestamp_ms {
                return Err(Error::NonIncreasingTimestamp {
                    line: line_no,
                    previous: prev.timestamp_ms,
                    current: sample.timestamp_ms,
                });
            }
        }
        samples.push(sample);
    }

    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Capture {
        activity,
        sensor,
        duration_s,
        samples,
    })
}

fn parse_timestamp(field: &str, line: usize) -> Result<i64> {
    if let Ok(ts) = field.parse::<i64>() {
        return Ok(ts);
    }
    if field.parse::<f64>().is_ok() {
        return Err(Error::SubMillisecond {
            line,
            text: field.to_string(),
        });
    }
    Err(Error::malformed(line, format!("timestamp `{field}` is not an integer")))
}

fn parse_axis(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() || field.eq_ignore_ascii_case(NULL_TOKEN) {
        return Ok(None);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::malformed(line, format!("axis value `{field}` is not a finite number"))),
    }
}

/// Writes a capture as comma-separated rows with a header line and LF
/// endings. Values use the shortest decimal form that re-parses to the same
/// `f64`.
pub fn serialize_capture(capture: &Capture, options: WriteOptions) -> Result<String> {
    let missing = capture.missing_count();
    if missing > 0 && !options.allow_missing {
        return Err(Error::MissingRowsNotAllowed { count: missing });
    }

    let mut out = String::with_capacity(capture.len() * 48);
    out.push_str("seq,timestamp_ms,x,y,z");
    if options.provenance {
        out.push_str(",provenance");
    }
    out.push('\n');

    use std::fmt::Write as _;
    for (i, s) in capture.samples().iter().enumerate() {
        let _ = write!(out, "{},{}", i + 1, s.timestamp_ms);
        for axis in [s.x, s.y, s.z] {
            match axis.value() {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => {
                    out.push(',');
                    out.push_str(NULL_TOKEN);
                }
            }
        }
        if options.provenance {
            out.push(',');
            out.push_str(s.x.state().as_str());
        }
        out.push('\n');
    }
    Ok(out)
}
