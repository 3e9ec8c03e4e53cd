//! Shallow target-domain classifier and evaluation metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::majority_label;
use crate::matrix::Matrix;
use crate::netgraph::cosine_similarity;

/// Anything that can label a feature vector.
pub trait Predictor {
    fn predict(&self, query: &[f64]) -> Result<usize>;

    fn predict_all(&self, queries: &Matrix) -> Result<Vec<usize>> {
        queries.iter_rows().map(|q| self.predict(q)).collect()
    }
}

/// Cosine k-nearest-neighbour classifier.
#[derive(Debug, Clone)]
pub struct Classifier {
    features: Matrix,
    labels: Vec<usize>,
    k: usize,
}

pub const DEFAULT_K_C: usize = 5;

/// Stores the training set after validating it.
pub fn knn_train(features: &Matrix, labels: &[usize], k_c: usize) -> Result<Classifier> {
    let n = features.rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    if k_c == 0 || k_c > n {
        return Err(Error::KOutOfRange { k: k_c, n });
    }
    Ok(Classifier {
        features: features.clone(),
        labels: labels.to_vec(),
        k: k_c,
    })
}

/// Majority class among the `k_c` most cosine-similar training rows.
/// Neighbour ties go to the lower row index, vote ties to the smaller class.
pub fn knn_predict(c: &Classifier, query: &[f64]) -> Result<usize> {
    if query.len() != c.features.cols() {
        return Err(Error::DimensionMismatch {
            expected: c.features.cols(),
            found: query.len(),
        });
    }
    let mut sims = c
        .features
        .iter_rows()
        .enumerate()
        .map(|(i, row)| Ok((cosine_similarity(query, row)?, i)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering { b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)) };
    if c.k < sims.len() {
        sims.select_nth_unstable_by(c.k - 1, order);
        sims.truncate(c.k);
    }
    let votes: Vec<usize> = sims.iter().map(|&(_, i)| c.labels[i]).collect();
    Ok(majority_label(&votes).expect("k_c >= 1"))
}

impl Predictor for Classifier {
    fn predict(&self, query: &[f64]) -> Result<usize> {
        knn_predict(self, query)
    }

    fn predict_all(&self, queries: &Matrix) -> Result<Vec<usize>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..queries.rows())
                .into_par_iter()
                .map(|i| knn_predict(self, queries.row(i)))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            queries.iter_rows().map(|q| knn_predict(self, q)).collect()
        }
    }
}

fn check_lengths(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Fraction of positions where the labels agree.
pub fn labeling_accuracy(assigned: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(assigned, truth)?;
    if truth.is_empty() {
        return Err(Error::InvalidInput("accuracy of empty labelings".into()));
    }
    let hits = assigned.iter().zip(truth).filter(|(a, t)| a == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `m x m` counts, rows = true class, columns = predicted class.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], m: usize) -> Result<Vec<Vec<u64>>> {
    check_lengths(pred, truth)?;
    let mut cm = vec![vec![0u64; m]; m];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= m || t >= m {
            return Err(Error::InvalidCluster {
                id: p.max(t),
                count: m,
            });
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// Per-class F1 from a confusion matrix. A class nobody has or predicts
/// scores 1; a class missing on only one side scores 0.
pub fn per_class_f1(cm: &[Vec<u64>]) -> Vec<f64> {
    let m = cm.len();
    (0..m)
        .map(|c| {
            let tp = cm[c][c] as f64;
            let support: u64 = cm[c].iter().sum();
            let predicted: u64 = cm.iter().map(|row| row[c]).sum();
            match (support, predicted) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                (s, p) => {
                    let precision = tp / p as f64;
                    let recall = tp / s as f64;
                    if precision + recall == 0.0 {
                        0.0
                    } else {
                        2.0 * precision * recall / (precision + recall)
                    }
                }
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over `m` classes.
pub fn macro_f1(pred: &[usize], truth: &[usize], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("macro F1 needs at least one class".into()));
    }
    let f1 = per_class_f1(&confusion_matrix(pred, truth, m)?);
    Ok(f1.iter().sum::<f64>() / m as f64)
}

/// Run parameters recorded alongside the metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub k_target: usize,
    pub k_source: usize,
    pub k0: usize,
    pub m: usize,
    pub k_c: usize,
    pub seed: u64,
    pub source_clustering: String,
    pub standardized: bool,
    pub reduce_dim: Option<usize>,
    pub n_source: usize,
    pub n_target: usize,
    pub target_clusters: usize,
}

/// Metrics of one transfer run. Target-side metrics are absent when the
/// target carried no evaluation labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub labeling_accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub upper_bound_f1: Option<f64>,
    pub per_class_f1: Option<Vec<f64>>,
    pub confusion: Option<Vec<Vec<u64>>>,
    pub nmi: Option<f64>,
    pub purity: Option<f64>,
    pub cluster_to_class: Vec<usize>,
    pub low_confidence: Vec<usize>,
    pub metadata: RunMetadata,
    pub warnings: Vec<String>,
}
