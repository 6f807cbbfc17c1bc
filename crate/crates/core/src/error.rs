use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no data rows")]
    EmptyInput,

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: timestamp {current} does not exceed previous timestamp {previous}")]
    NonIncreasingTimestamp {
        line: usize,
        previous: i64,
        current: i64,
    },

    #[error("line {line}: row mixes missing and numeric axis values")]
    MixedRow { line: usize },

    #[error("line {line}: timestamp `{text}` is not an integer number of milliseconds")]
    SubMillisecond { line: usize, text: String },

    #[error("capture contains {count} missing rows; enable debug output to serialize placeholders")]
    MissingRowsNotAllowed { count: usize },

    #[error("capture holds missing rows where only observed or imputed rows are accepted")]
    UnexpectedMissingRows,

    #[error("over-complete capture: {observed} samples, expected at most {expected}")]
    OverComplete { expected: usize, observed: usize },

    #[error("placeholder timestamp {timestamp} collides with or precedes {previous}")]
    GridConflict { timestamp: i64, previous: i64 },

    #[error("gap report does not describe this capture: {0}")]
    ReportMismatch(String),

    #[error("no neighbors available: window contains no known rows")]
    NoNeighbors,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid gap specification: {0}")]
    InvalidGapSpec(String),

    #[error("no imputed row at ground-truth timestamp {timestamp}")]
    TimestampMismatch { timestamp: i64 },

    #[error("cannot determine {what} for {path}")]
    UnknownLayout { path: PathBuf, what: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedRow {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
