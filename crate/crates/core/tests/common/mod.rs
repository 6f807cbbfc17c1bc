#![allow(dead_code)]

use std::path::PathBuf;

use gapfill::{Activity, Capture, Sample, SensorKind, Weighting};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn excerpt_path() -> PathBuf {
    fixtures().join("excerpt/moving_downstairs/accelerometer/excerpt.csv")
}

pub fn load_excerpt() -> Capture {
    let text = std::fs::read_to_string(excerpt_path()).unwrap();
    gapfill::parse_capture(&text, SensorKind::Accelerometer, Activity::MovingDownstairs, 5).unwrap()
}

/// Brute-force KNN mean: sort every known row by (|dt|, timestamp), take the
/// first k, average. Shares no code with the library search.
pub fn oracle_impute(
    target_ms: i64,
    known: &[(i64, [f64; 3])],
    k: usize,
    weighting: Weighting,
) -> [f64; 3] {
    let mut all: Vec<(u64, i64, [f64; 3])> = known
        .iter()
        .map(|&(t, v)| ((t - target_ms).unsigned_abs(), t, v))
        .collect();
    all.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    all.truncate(k);
    match weighting {
        Weighting::Uniform => {
            let n = all.len() as f64;
            std::array::from_fn(|axis| all.iter().map(|e| e.2[axis]).sum::<f64>() / n)
        }
        Weighting::InverseDistance => {
            if let Some(zero) = all.iter().find(|e| e.0 == 0) {
                return zero.2;
            }
            let wsum: f64 = all.iter().map(|e| 1.0 / e.0 as f64).sum();
            std::array::from_fn(|axis| all.iter().map(|e| e.2[axis] / e.0 as f64).sum::<f64>() / wsum)
        }
    }
}

/// Random rows for a chunk: strictly increasing timestamps, at least one
/// target and one known row. Returns (samples, known, targets).
pub fn random_chunk_rows<R: Rng>(rng: &mut R, max_rows: usize) -> (Vec<Sample>, Vec<usize>, Vec<usize>) {
    let n = rng.gen_range(2..=max_rows);
    let mut t: i64 = rng.gen_range(1_400_000_000_000..1_600_000_000_000);
    let mut flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n);
    while b == a {
        b = rng.gen_range(0..n);
    }
    flags[a] = true;
    flags[b] = false;

    let mut samples = Vec::with_capacity(n);
    let (mut known, mut targets) = (Vec::new(), Vec::new());
    for (i, missing) in flags.into_iter().enumerate() {
        t += rng.gen_range(1..=25);
        if missing {
            samples.push(Sample::missing(t));
            targets.push(i);
        } else {
            let v = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            samples.push(Sample::observed(t, v));
            known.push(i);
        }
    }
    (samples, known, targets)
}

/// A capture eligible for imputation (at most one second missing) whose
/// gaps the detector can locate: timestamps sit within a few ms of the
/// nominal grid, dropped rows come out as whole blocks, and whatever is not
/// dropped internally is cut from the end.
pub fn random_eligible_capture<R: Rng>(rng: &mut R) -> (Capture, usize) {
    let sensor = *SensorKind::ALL.choose(rng).unwrap();
    let duration_s = rng.gen_range(1..=5u32);
    let period = sensor.period_ms();
    let expected = duration_s as usize * sensor.one_second();
    let limit = sensor.one_second().min(expected - 2);
    let missing = match rng.gen_range(0..4) {
        0 => 0,
        1 => rng.gen_range(0..=sensor.fill_quota().min(limit)),
        _ => rng.gen_range(0..=limit),
    };

    let jitter = period / 5;
    let start: i64 = rng.gen_range(1_400_000_000_000..1_600_000_000_000);
    let mut rows: Vec<Option<Sample>> = (0..expected as i64)
        .map(|i| {
            let t = start + i * period + rng.gen_range(-jitter..=jitter);
            let v = [
                rng.gen_range(-15.0..15.0),
                rng.gen_range(-15.0..15.0),
                rng.gen_range(-15.0..15.0),
            ];
            Some(Sample::observed(t, v))
        })
        .collect();

    let mut internal = if missing > 0 { rng.gen_range(0..=missing) } else { 0 };
    let trailing = missing - internal;
    for r in rows.iter_mut().rev().take(trailing) {
        *r = None;
    }
    let keep_head = 1;
    let body = expected - trailing;
    while internal > 0 {
        let len = rng.gen_range(1..=internal);
        // leave the first row and the row before the trailing cut
        let lo = keep_head;
        let hi = body.saturating_sub(1 + len);
        if hi < lo {
            break;
        }
        let at = rng.gen_range(lo..=hi);
        if rows[at..at + len].iter().all(Option::is_some)
            && rows[at - 1].is_some()
            && rows[at + len].is_some()
        {
            for r in &mut rows[at..at + len] {
                *r = None;
            }
            internal -= len;
        } else if rng.gen_bool(0.1) {
            // give up on crowded layouts; the remainder becomes trailing
            break;
        }
    }
    let samples: Vec<Sample> = rows.into_iter().flatten().collect();
    let missing = expected - samples.len();
    let activity = *Activity::ALL.choose(rng).unwrap();
    (Capture::new(activity, sensor, duration_s, samples).unwrap(), missing)
}
