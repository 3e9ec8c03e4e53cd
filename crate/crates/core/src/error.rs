use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the label-transfer library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown schema column `{0}`")]
    UnknownColumn(String),
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell `{value}` in column `{column}` at line {line}")]
    NonNumeric {
        column: String,
        line: u64,
        value: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("recording of {len} samples is shorter than one window of {window} samples")]
    RecordingTooShort { len: usize, window: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dataset of {n} rows is too small to populate all split parts")]
    SplitTooSmall { n: usize },
    #[error("k = {k} out of range for {n} vertices")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid cluster id {id} (cluster count {count})")]
    InvalidCluster { id: usize, count: usize },
    #[error("cost matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("cost matrix entry ({row}, {col}) is not finite and non-negative: {value}")]
    BadCost { row: usize, col: usize, value: f64 },
    #[error("missing labels: {0}")]
    MissingLabels(String),
    #[error("cluster {0} has no mapped class")]
    UnmappedCluster(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
