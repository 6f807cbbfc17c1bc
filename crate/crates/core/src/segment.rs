//! Per-pass imputation windows.
//!
//! A window holds at most one second of rows (`T`): up to `T - Q` known rows
//! and up to one fill quota (`Q`) of contiguous missing rows.

use crate::capture::{Capture, Sample, SensorKind};
use crate::error::{Error, Result};

/// A window over a working capture. Indices are absolute capture indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk<'a> {
    samples: &'a [Sample],
    known: Vec<usize>,
    targets: Vec<usize>,
}

impl<'a> Chunk<'a> {
    /// Builds a chunk, checking the window invariants against `samples`.
    pub fn new(samples: &'a [Sample], known: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        if known.is_empty() {
            return Err(Error::NoNeighbors);
        }
        if targets.is_empty() {
            return Err(Error::InvalidConfig("chunk has no target rows".into()));
        }
        let sorted = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&known) || !sorted(&targets) {
            return Err(Error::InvalidConfig("chunk indices must be ascending".into()));
        }
        if known.iter().chain(&targets).any(|&i| i >= samples.len()) {
            return Err(Error::InvalidConfig("chunk index out of range".into()));
        }
        if !known.iter().all(|&i| samples[i].is_known()) {
            return Err(Error::InvalidConfig("known index points at a missing row".into()));
        }
        if !targets.iter().all(|&i| samples[i].is_missing()) {
            return Err(Error::InvalidConfig("target index points at a filled row".into()));
        }
        Ok(Chunk {
            samples,
            known,
            targets,
        })
    }

    pub fn known_indices(&self) -> &[usize] {
        &self.known
    }

    pub fn target_indices(&self) -> &[usize] {
        &self.targets
    }

    pub fn sample(&self, index: usize) -> &Sample {
        &self.samples[index]
    }

    /// Index of the chunk's first row in the capture.
    pub fn capture_offset(&self) -> usize {
        self.known[0].min(self.targets[0])
    }

    /// Index one past the chunk's last row.
    pub fn capture_end(&self) -> usize {
        self.known[self.known.len() - 1].max(self.targets[self.targets.len() - 1]) + 1
    }

    pub fn len(&self) -> usize {
        self.known.len() + self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Selects the next window to impute, or `None` once nothing is missing.
pub fn next_chunk(capture: &Capture) -> Result<Option<Chunk<'_>>> {
    next_chunk_in(capture.samples(), capture.sensor)
}

pub fn next_chunk_in(samples: &[Sample], sensor: SensorKind) -> Result<Option<Chunk<'_>>> {
    let window = sensor.one_second();
    let quota = sensor.fill_quota();

    let missing: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.is_missing().then_some(i))
        .collect();
    let Some(&first) = missing.first() else {
        return Ok(None);
    };
    let last = missing[missing.len() - 1];
    let contiguous = last - first + 1 == missing.len();

    // Small remainder sitting in the final second: take the last T rows whole.
    if missing.len() <= quota && contiguous {
        let start = samples.len().saturating_sub(window);
        if first >= start {
            let known = (start..samples.len())
                .filter(|&i| samples[i].is_known())
                .collect();
            return Chunk::new(samples, known, missing).map(Some);
        }
    }

    // First quota of the earliest missing block plus the known rows before it.
    let block_end = (first..samples.len())
        .find(|&i| !samples[i].is_missing())
        .unwrap_or(samples.len());
    let target_end = block_end.min(first + quota);
    let targets: Vec<usize> = (first..target_end).collect();

    let want = window - targets.len();
    let before_start = first.saturating_sub(want);
    let mut known: Vec<usize> = (before_start..first).collect();
    let deficit = want - known.len();
    if deficit > 0 {
        // Too little history: extend forward past the missing run.
        known.extend(
            (target_end..samples.len())
                .filter(|&i| samples[i].is_known())
                .take(deficit),
        );
    }
    Chunk::new(samples, known, targets).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Activity;

    /// 1-based inclusive ranges of missing rows over `n` rows at 10 ms.
    fn working(n: usize, missing: &[(usize, usize)], sensor: SensorKind) -> Capture {
        let samples = (1..=n)
            .map(|row| {
                let ts = row as i64 * sensor.period_ms();
                if missing.iter().any(|&(a, b)| (a..=b).contains(&row)) {
                    Sample::missing(ts)
                } else {
                    Sample::observed(ts, [row as f64, 0.0, 0.0])
                }
            })
            .collect();
        Capture::new(Activity::Walking, sensor, 5, samples).unwrap()
    }

    fn rows(ix: &[usize]) -> Vec<usize> {
        ix.iter().map(|i| i + 1).collect()
    }

    #[test]
    fn trailing_fifty_takes_ninety_before_first_ten() {
        let c = working(500, &[(451, 500)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(rows(chunk.known_indices()), (361..=450).collect::<Vec<_>>());
        assert_eq!(rows(chunk.target_indices()), (451..=460).collect::<Vec<_>>());
        assert_eq!(chunk.capture_offset() + 1, 361);
        assert_eq!(chunk.capture_end(), 460);
        assert_eq!(chunk.len(), 100);
    }

    #[test]
    fn small_trailing_gap_uses_last_hundred() {
        let c = working(500, &[(491, 500)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(chunk.capture_offset() + 1, 401);
        assert_eq!(chunk.capture_end(), 500);
        assert_eq!(rows(chunk.target_indices()), (491..=500).collect::<Vec<_>>());
        assert_eq!(chunk.known_indices().len(), 90);
    }

    #[test]
    fn small_gap_in_last_second_keeps_rows_after_it() {
        let c = working(500, &[(480, 484)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(chunk.capture_offset() + 1, 401);
        assert_eq!(chunk.capture_end(), 500);
        assert_eq!(chunk.known_indices().len(), 95);
    }

    #[test]
    fn no_missing_rows_yields_none() {
        let c = working(500, &[], SensorKind::Accelerometer);
        assert!(next_chunk(&c).unwrap().is_none());
    }

    #[test]
    fn early_small_gap_falls_back_to_block_window() {
        let c = working(500, &[(200, 203)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(rows(chunk.target_indices()), vec![200, 201, 202, 203]);
        assert_eq!(rows(chunk.known_indices()), (104..=199).collect::<Vec<_>>());
    }

    #[test]
    fn leading_gap_extends_forward() {
        let c = working(500, &[(1, 15)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(rows(chunk.target_indices()), (1..=10).collect::<Vec<_>>());
        // skips the untargeted missing rows 11..15
        assert_eq!(rows(chunk.known_indices()), (16..=105).collect::<Vec<_>>());
    }

    #[test]
    fn non_contiguous_targets_only_earliest_block() {
        let c = working(500, &[(300, 302), (495, 496)], SensorKind::Accelerometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(rows(chunk.target_indices()), vec![300, 301, 302]);
        assert!(chunk.len() <= 100);
    }

    #[test]
    fn magnetometer_scales_to_ten_and_one() {
        let c = working(50, &[(46, 50)], SensorKind::Magnetometer);
        let chunk = next_chunk(&c).unwrap().unwrap();
        assert_eq!(rows(chunk.target_indices()), vec![46]);
        assert_eq!(rows(chunk.known_indices()), (37..=45).collect::<Vec<_>>());
    }

    #[test]
    fn all_missing_has_no_neighbors() {
        let c = working(20, &[(1, 20)], SensorKind::Accelerometer);
        assert!(matches!(next_chunk(&c), Err(Error::NoNeighbors)));
    }
}
