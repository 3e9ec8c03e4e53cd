//! Raw recordings, windowing, feature extraction, dimensionality reduction
//! and dataset splitting.

mod features;
mod reduce;
mod synth;

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use features::{extract_all, extract_features, FeatureVector, ENTROPY_BINS, FEATURES_PER_CHANNEL};
pub use reduce::{reduce_dim, standardize, Identity, Pca, PcaModel, Reducer, Standardizer};
pub use synth::{synth_generate, Bridge, Layout, SynthSpec};

/// Multi-channel sensor series sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub channel_names: Vec<String>,
    pub channels: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub labels: Option<Vec<usize>>,
}

impl RawRecording {
    pub fn new(
        channel_names: Vec<String>,
        channels: Vec<Vec<f64>>,
        sample_rate_hz: f64,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if channels.is_empty() || channel_names.len() != channels.len() {
            return Err(Error::InvalidInput(
                "recording needs at least one named channel".into(),
            ));
        }
        let len = channels[0].len();
        if len == 0 || channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidInput(
                "channel series must be non-empty and of equal length".into(),
            ));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != len {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: len,
                });
            }
        }
        Ok(Self {
            channel_names,
            channels,
            sample_rate_hz,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Column mapping for sensor CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default)]
    pub time_column: Option<String>,
    pub channels: Vec<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    /// Required unless a time column is present to infer it from.
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::UnknownColumn(name.to_string()))
}

fn parse_cell(value: &str, column: &str, line: u64) -> Result<f64> {
    let v = value.trim();
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::NonNumeric {
            column: column.to_string(),
            line,
            value: v.to_string(),
        })
}

fn parse_label(value: &str, column: &str, line: u64) -> Result<usize> {
    let v = value.trim();
    v.parse::<usize>().map_err(|_| Error::NonNumeric {
        column: column.to_string(),
        line,
        value: v.to_string(),
    })
}

/// Reads a headed sensor CSV into a recording, channels in schema order.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawRecording> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();

    let channel_idx = schema
        .channels
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    if channel_idx.is_empty() {
        return Err(Error::InvalidInput("schema names no channel columns".into()));
    }
    let time_idx = schema
        .time_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;
    let label_idx = schema
        .label_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut channels = vec![Vec::new(); channel_idx.len()];
    let mut times = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (series, (&idx, name)) in channels
            .iter_mut()
            .zip(channel_idx.iter().zip(&schema.channels))
        {
            series.push(parse_cell(&record[idx], name, line)?);
        }
        if let (Some(idx), Some(name)) = (time_idx, schema.time_column.as_deref()) {
            times.push(parse_cell(&record[idx], name, line)?);
        }
        if let (Some(idx), Some(name)) = (label_idx, schema.label_column.as_deref()) {
            labels.push(parse_label(&record[idx], name, line)?);
        }
    }
    if channels[0].is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} contains no data rows",
            path.display()
        )));
    }

    let sample_rate_hz = match schema.sample_rate_hz {
        Some(r) => r,
        None => {
            let span = match (times.first(), times.last()) {
                (Some(a), Some(b)) if times.len() > 1 => b - a,
                _ => 0.0,
            };
            if span <= 0.0 {
                return Err(Error::InvalidInput(
                    "sample rate not given and cannot be inferred from the time column".into(),
                ));
            }
            (times.len() - 1) as f64 / span
        }
    };

    RawRecording::new(
        schema.channels.clone(),
        channels,
        sample_rate_hz,
        label_idx.map(|_| labels),
    )
}

/// One segment of a recording, `channels x window_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_index: usize,
    pub samples: Vec<Vec<f64>>,
    pub label: Option<usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Most frequent label; ties go to the smallest class id.
pub(crate) fn majority_label(labels: &[usize]) -> Option<usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (label, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l)
}

/// Window length and stride in samples.
pub fn window_geometry(
    sample_rate_hz: f64,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidInput(format!(
            "overlap fraction must be in [0, 1), got {overlap_fraction}"
        )));
    }
    let len = (window_seconds * sample_rate_hz).round();
    if !(len >= 1.0 && len.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "window of {window_seconds} s at {sample_rate_hz} Hz holds no samples"
        )));
    }
    let len = len as usize;
    let stride = ((len as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    Ok((len, stride))
}

/// Sliding-window segmentation; the trailing partial window is dropped.
pub fn segment(
    rec: &RawRecording,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<Vec<Window>> {
    let (len, stride) = window_geometry(rec.sample_rate_hz, window_seconds, overlap_fraction)?;
    if rec.len() < len {
        return Err(Error::RecordingTooShort {
            len: rec.len(),
            window: len,
        });
    }
    let windows = (0..=rec.len() - len)
        .step_by(stride)
        .map(|start| Window {
            start_index: start,
            samples: rec
                .channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
            label: rec
                .labels
                .as_ref()
                .and_then(|l| majority_label(&l[start..start + len])),
        })
        .collect();
    Ok(windows)
}

/// Feature matrix for one domain, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
    pub class_names: Option<Vec<String>>,
}

impl DomainDataset {
    pub fn new(
        features: Matrix,
        labels: Option<Vec<usize>>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidInput("dataset has no rows or columns".into()));
        }
        if features.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("dataset has non-finite features".into()));
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: features.rows(),
                });
            }
            if let Some(names) = &class_names {
                if let Some(&bad) = l.iter().find(|&&c| c >= names.len()) {
                    return Err(Error::InvalidInput(format!(
                        "label {bad} has no class name ({} names)",
                        names.len()
                    )));
                }
            }
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of classes `m`: class-name count if known, else max label + 1.
    pub fn class_count(&self) -> Option<usize> {
        match (&self.class_names, &self.labels) {
            (Some(names), _) => Some(names.len()),
            (None, Some(l)) => l.iter().max().map(|m| m + 1),
            (None, None) => None,
        }
    }

    fn slice(&self, r: Range<usize>) -> DomainDataset {
        DomainDataset {
            features: self.features.slice_rows(r.start, r.end),
            labels: self.labels.as_ref().map(|l| l[r.clone()].to_vec()),
            class_names: self.class_names.clone(),
        }
    }

    pub fn with_features(&self, features: Matrix) -> DomainDataset {
        DomainDataset {
            features,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Reads a feature-matrix CSV (`f0..f{d-1}` plus optional `label`).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
        let mut feature_cols = Vec::new();
        let mut label_col = None;
        for (i, h) in headers.iter().enumerate() {
            if h == "label" {
                label_col = Some(i);
            } else if let Some(idx) = h.strip_prefix('f').and_then(|s| s.parse::<usize>().ok()) {
                feature_cols.push((idx, i));
            } else {
                return Err(Error::UnknownColumn(h.to_string()));
            }
        }
        feature_cols.sort_unstable();
        if feature_cols.iter().enumerate().any(|(k, &(idx, _))| k != idx) {
            return Err(Error::InvalidInput(format!(
                "{}: feature columns must be f0..f{{d-1}}",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_err(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != headers.len() {
                return Err(Error::RaggedRow {
                    line,
                    expected: headers.len(),
                    found: record.len(),
                });
            }
            let row = feature_cols
                .iter()
                .map(|&(_, c)| parse_cell(&record[c], &headers[c], line))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            if let Some(c) = label_col {
                labels.push(parse_label(&record[c], "label", line)?);
            }
        }
        DomainDataset::new(
            Matrix::from_rows(&rows)?,
            label_col.map(|_| labels),
            None,
        )
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("f{j}")).collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(f64::to_string).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))
    }
}

/// Stacks windows' feature vectors into a dataset, labels from the windows.
pub fn windows_to_dataset(windows: &[Window]) -> Result<DomainDataset> {
    let features = extract_all(windows)?;
    let labels = if windows.iter().all(|w| w.label.is_some()) {
        Some(windows.iter().filter_map(|w| w.label).collect())
    } else {
        None
    };
    DomainDataset::new(features, labels, None)
}

pub const DEFAULT_SPLIT: [f64; 3] = [0.5, 0.25, 0.25];

/// Contiguous row ranges for a split; every part with a nonzero ratio is
/// non-empty.
pub fn split_ranges(n: usize, ratios: [f64; 3]) -> Result<[Range<usize>; 3]> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let b1 = ((n as f64) * ratios[0]).round() as usize;
    let b2 = (((n as f64) * (ratios[0] + ratios[1])).round() as usize).clamp(b1, n);
    let parts = [0..b1.min(n), b1.min(n)..b2, b2..n];
    if parts
        .iter()
        .zip(ratios)
        .any(|(p, r)| r > 0.0 && p.is_empty())
    {
        return Err(Error::SplitTooSmall { n });
    }
    Ok(parts)
}

/// Temporal-contiguous `(train, test, validation)` split.
pub fn split(
    ds: &DomainDataset,
    ratios: [f64; 3],
) -> Result<(DomainDataset, DomainDataset, DomainDataset)> {
    let [a, b, c] = split_ranges(ds.len(), ratios)?;
    Ok((ds.slice(a), ds.slice(b), ds.slice(c)))
}
