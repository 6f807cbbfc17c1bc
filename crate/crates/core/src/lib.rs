//! Missing-sample detection and iterative chunked KNN imputation for
//! fixed-duration inertial sensor captures.
//!
//! The flow for one capture is [`detect_gaps`] → [`insert_placeholders`] →
//! repeated [`next_chunk`] / [`impute_chunk`] passes, wrapped up by
//! [`impute_capture`]. [`eval`] measures reconstruction quality on
//! synthetically degraded captures.

pub mod capture;
pub mod error;
pub mod eval;
pub mod gaps;
pub mod knn;
pub mod pipeline;
pub mod segment;

pub use capture::{
    parse_capture, serialize_capture, Activity, AxisState, AxisValue, Capture, Sample, SensorKind, WriteOptions,
};
pub use error::{Error, Result};
pub use eval::{compare_baselines, inject_gaps, score, BaselineTable, GapMode, GapSpec, Method, ScoreReport};
pub use gaps::{
    classify_capture, classify_missing, detect_gaps, expected_sample_count, insert_placeholders, Bucket,
    Classification, GapKind, GapReport, GapSpan, DEFAULT_GAP_THRESHOLD,
};
pub use knn::{impute_chunk, knn_neighbors, ImputationConfig, ImputedRow, Neighbor, NeighborSet, Weighting};
pub use pipeline::{
    fill_missing, impute_capture, run_pipeline, scan_dataset, scan_directory, BucketCounts, DatasetScan,
    DatasetStats, ImputationLog, ImputationOutcome, PipelineOptions, PipelineSummary, ScanItem, Status,
};
pub use segment::{next_chunk, Chunk};
