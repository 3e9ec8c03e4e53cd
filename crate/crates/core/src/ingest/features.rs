use crate::error::{Error, Result};
use crate::ingest::Window;
use crate::matrix::Matrix;

pub const FEATURES_PER_CHANNEL: usize = 4;
pub const ENTROPY_BINS: usize = 16;

/// Time-domain features of one window, channel blocks in channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Shannon entropy (bits) of a fixed-bin histogram over the series' own range.
fn histogram_entropy(xs: &[f64]) -> f64 {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if hi <= lo {
        return 0.0;
    }
    let mut counts = [0usize; ENTROPY_BINS];
    let width = hi - lo;
    for &x in xs {
        let bin = (((x - lo) / width) * ENTROPY_BINS as f64).floor() as usize;
        counts[bin.min(ENTROPY_BINS - 1)] += 1;
    }
    let n = xs.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn channel_features(xs: &[f64], out: &mut Vec<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let peak = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let energy = xs.iter().map(|x| x * x).sum::<f64>() / n;
    out.extend_from_slice(&[mean, peak, histogram_entropy(xs), energy]);
}

/// Mean, peak amplitude, histogram entropy and energy for every channel.
pub fn extract_features(w: &Window) -> Result<FeatureVector> {
    if w.samples.is_empty() || w.is_empty() {
        return Err(Error::InvalidInput("empty window".into()));
    }
    let mut out = Vec::with_capacity(w.samples.len() * FEATURES_PER_CHANNEL);
    for ch in &w.samples {
        channel_features(ch, &mut out);
    }
    Ok(FeatureVector(out))
}

/// Feature matrix with one row per window, in window order.
pub fn extract_all(windows: &[Window]) -> Result<Matrix> {
    #[cfg(feature = "parallel")]
    let rows: Vec<FeatureVector> = {
        use rayon::prelude::*;
        windows
            .par_iter()
            .map(extract_features)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<FeatureVector> = windows.iter().map(extract_features).collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = rows.into_iter().map(|f| f.0).collect();
    Matrix::from_rows(&rows)
}
