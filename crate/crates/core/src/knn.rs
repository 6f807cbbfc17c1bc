//! Time-distance k-nearest-neighbor imputation.
//!
//! Placeholder rows carry no axis values, so the only usable feature is the
//! timestamp. Each target axis is filled with the (optionally inverse-distance
//! weighted) mean of its k nearest known rows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaps::DEFAULT_GAP_THRESHOLD;
use crate::segment::Chunk;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    InverseDistance,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseDistance => "inverse-distance",
        })
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(Weighting::Uniform),
            "inverse-distance" | "distance" => Ok(Weighting::InverseDistance),
            other => Err(format!("unknown weighting `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputationConfig {
    pub k: usize,
    pub weighting: Weighting,
    pub gap_threshold: f64,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            k: 5,
            weighting: Weighting::Uniform,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

impl ImputationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.gap_threshold.is_finite() && self.gap_threshold > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gap threshold must be a finite number above 1, got {}",
                self.gap_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub timestamp_ms: i64,
    pub distance_ms: u64,
}

/// Neighbors sorted by distance, ties toward the earlier timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeighborSet {
    pub entries: Vec<Neighbor>,
}

/// Finds the `k` known rows closest in time to `target_ms`.
///
/// `known` is `(index, timestamp)` in any order. The search walks outward
/// from the target's position in the time-sorted list, taking the nearer
/// side at each step.
pub fn knn_neighbors(target_ms: i64, known: &[(usize, i64)], k: usize) -> Result<NeighborSet> {
    if known.is_empty() {
        return Err(Error::NoNeighbors);
    }
    let mut sorted = known.to_vec();
    if !sorted.windows(2).all(|w| (w[0].1, w[0].0) <= (w[1].1, w[1].0)) {
        sorted.sort_by_key(|&(i, t)| (t, i));
    }

    let take = k.min(sorted.len());
    let split = sorted.partition_point(|&(_, t)| t < target_ms);
    // `left` walks down from split-1, `right` walks up from split
    let mut left = split;
    let mut right = split;
    let mut entries = Vec::with_capacity(take);
    let dist = |t: i64| target_ms.abs_diff(t);

    while entries.len() < take {
        let pick_left = match (left.checked_sub(1), sorted.get(right)) {
            (Some(l), Some(&(_, rt))) => dist(sorted[l].1) <= dist(rt),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!("take is bounded by the population"),
        };
        let (index, timestamp_ms) = if pick_left {
            left -= 1;
            sorted[left]
        } else {
            right += 1;
            sorted[right - 1]
        };
        entries.push(Neighbor {
            index,
            timestamp_ms,
            distance_ms: dist(timestamp_ms),
        });
    }
    Ok(NeighborSet { entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputedRow {
    pub index: usize,
    pub values: [f64; 3],
}

/// Imputes every target of `chunk` from its known rows only. Targets filled in
/// the same pass never feed each other, so the result does not depend on
/// target order.
pub fn impute_chunk(chunk: &Chunk<'_>, config: &ImputationConfig) -> Result<Vec<ImputedRow>> {
    config.validate()?;
    let known: Vec<(usize, i64)> = chunk
        .known_indices()
        .iter()
        .map(|&i| (i, chunk.sample(i).timestamp_ms))
        .collect();

    chunk
        .target_indices()
        .iter()
        .map(|&target| {
            let ts = chunk.sample(target).timestamp_ms;
            let neighbors = knn_neighbors(ts, &known, config.k)?;
            let values = weighted_mean(chunk, &neighbors, config.weighting)?;
            Ok(ImputedRow {
                index: target,
                values,
            })
        })
        .collect()
}

fn weighted_mean(chunk: &Chunk<'_>, neighbors: &NeighborSet, weighting: Weighting) -> Result<[f64; 3]> {
    let rows: Vec<([f64; 3], u64)> = neighbors
        .entries
        .iter()
        .map(|n| {
            chunk
                .sample(n.index)
                .values()
                .map(|v| (v, n.distance_ms))
                .ok_or(Error::NoNeighbors)
        })
        .collect::<Result<_>>()?;

    if weighting == Weighting::InverseDistance {
        if let Some((v, _)) = rows.iter().find(|(_, d)| *d == 0) {
            return Ok(*v);
        }
    }

    let mut out = [0.0; 3];
    for (axis, slot) in out.iter_mut().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (v, d) in &rows {
            let w = match weighting {
                Weighting::Uniform => 1.0,
                Weighting::InverseDistance => 1.0 / *d as f64,
            };
            num += w * v[axis];
            den += w;
            lo = lo.min(v[axis]);
            hi = hi.max(v[axis]);
        }
        // rounding can push a mean of near-equal values just past its inputs
        *slot = (num / den).clamp(lo, hi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Sample;

    #[test]
    fn two_nearest_of_three() {
        let known = [(0, 0), (1, 10), (2, 20)];
        let set = knn_neighbors(30, &known, 2).unwrap();
        let got: Vec<(i64, u64)> = set.entries.iter().map(|n| (n.timestamp_ms, n.distance_ms)).collect();
        assert_eq!(got, vec![(20, 10), (10, 20)]);
    }

    #[test]
    fn exact_match_has_zero_distance() {
        let known = [(0, 0), (1, 10), (2, 20)];
        let set = knn_neighbors(10, &known, 1).unwrap();
        assert_eq!(set.entries, vec![Neighbor { index: 1, timestamp_ms: 10, distance_ms: 0 }]);
    }

    #[test]
    fn k_clipped_to_population() {
        let known = [(0, 0), (1, 10), (2, 20), (3, 30)];
        assert_eq!(knn_neighbors(15, &known, 10).unwrap().entries.len(), 4);
    }

    #[test]
    fn ties_prefer_earlier_timestamp() {
        let known = [(7, 20), (3, 0)];
        let set = knn_neighbors(10, &known, 1).unwrap();
        assert_eq!(set.entries[0].timestamp_ms, 0);
    }

    #[test]
    fn empty_known_set() {
        assert!(matches!(knn_neighbors(0, &[], 3), Err(Error::NoNeighbors)));
    }

    fn ramp_chunk() -> Vec<Sample> {
        vec![
            Sample::observed(0, [0.0, 0.0, 0.0]),
            Sample::observed(10, [10.0, 1.0, -1.0]),
            Sample::observed(20, [20.0, 2.0, -2.0]),
            Sample::missing(30),
        ]
    }

    #[test]
    fn uniform_mean_of_two_nearest() {
        let samples = ramp_chunk();
        let chunk = Chunk::new(&samples, vec![0, 1, 2], vec![3]).unwrap();
        let config = ImputationConfig { k: 2, ..Default::default() };
        let out = impute_chunk(&chunk, &config).unwrap();
        assert_eq!(out[0].index, 3);
        assert_eq!(out[0].values[0], 15.0);
    }

    #[test]
    fn inverse_distance_mean() {
        let samples = ramp_chunk();
        let chunk = Chunk::new(&samples, vec![0, 1, 2], vec![3]).unwrap();
        let config = ImputationConfig {
            k: 2,
            weighting: Weighting::InverseDistance,
            ..Default::default()
        };
        let out = impute_chunk(&chunk, &config).unwrap();
        let expected = (20.0 * (1.0 / 10.0) + 10.0 * (1.0 / 20.0)) / (1.0 / 10.0 + 1.0 / 20.0);
        assert!((out[0].values[0] - expected).abs() < 1e-12);
        assert!((out[0].values[0] - 16.666_666_666_666_668).abs() < 1e-12);
    }

    #[test]
    fn identical_neighbors_reproduce_exactly() {
        let mut samples: Vec<Sample> = (0..8).map(|i| Sample::observed(i * 10, [1.0, 2.0, 3.0])).collect();
        samples.push(Sample::missing(80));
        samples.extend((9..12).map(|i| Sample::observed(i * 10, [0.1, 0.1, 0.1])));
        let known: Vec<usize> = (0..8).collect();
        let chunk = Chunk::new(&samples, known, vec![8]).unwrap();
        for k in 1..=8 {
            for weighting in [Weighting::Uniform, Weighting::InverseDistance] {
                let config = ImputationConfig { k, weighting, ..Default::default() };
                assert_eq!(impute_chunk(&chunk, &config).unwrap()[0].values, [1.0, 2.0, 3.0]);
            }
        }
        // 0.1 averaged three times overshoots without clamping
        let chunk = Chunk::new(&samples, vec![9, 10, 11], vec![8]).unwrap();
        let config = ImputationConfig { k: 3, ..Default::default() };
        assert_eq!(impute_chunk(&chunk, &config).unwrap()[0].values, [0.1, 0.1, 0.1]);
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(ImputationConfig { k: 0, ..Default::default() }.validate().is_err());
        assert!(ImputationConfig { gap_threshold: 1.0, ..Default::default() }.validate().is_err());
        assert!(ImputationConfig { gap_threshold: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(ImputationConfig::default().validate().is_ok());
    }

    #[test]
    fn weighting_names() {
        assert_eq!("inverse-distance".parse::<Weighting>().unwrap(), Weighting::InverseDistance);
        assert_eq!("uniform".parse::<Weighting>().unwrap(), Weighting::Uniform);
        assert_eq!(Weighting::InverseDistance.to_string(), "inverse-distance");
    }
}
