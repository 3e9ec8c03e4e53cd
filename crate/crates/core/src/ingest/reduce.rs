use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Pluggable feature reduction applied before graph construction.
pub trait Reducer {
    fn reduce(&self, features: &Matrix) -> Result<Matrix>;
}

/// Passes features through unchanged, e.g. when they were reduced offline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Reducer for Identity {
    fn reduce(&self, features: &Matrix) -> Result<Matrix> {
        Ok(features.clone())
    }
}

/// Principal-component projection onto at most `target_dim` components.
#[derive(Debug, Clone, Copy)]
pub struct Pca {
    pub target_dim: usize,
}

impl Reducer for Pca {
    fn reduce(&self, features: &Matrix) -> Result<Matrix> {
        reduce_dim(features, self.target_dim)
    }
}

/// Fitted principal components.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One unit-length component per row, by descending eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

impl PcaModel {
    pub fn fit(features: &Matrix, target_dim: usize) -> Result<Self> {
        let (n, d) = (features.rows(), features.cols());
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "principal components need at least 2 rows, got {n}"
            )));
        }
        if target_dim == 0 || target_dim > d {
            return Err(Error::InvalidInput(format!(
                "target dimension {target_dim} must be in 1..={d}"
            )));
        }
        let mut mean = vec![0.0; d];
        for row in features.iter_rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let centered = DMatrix::from_fn(n, d, |i, j| features.get(i, j) - mean[j]);
        let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let largest = eig.eigenvalues[order[0]];
        if !(largest > 0.0) {
            return Err(Error::InvalidInput("features have zero variance".into()));
        }
        let rank = order
            .iter()
            .take_while(|&&k| eig.eigenvalues[k] > largest * RANK_TOLERANCE)
            .count();
        let keep = target_dim.min(rank);

        let mut components = Matrix::zeros(keep, d);
        let mut eigenvalues = Vec::with_capacity(keep);
        for (r, &k) in order.iter().take(keep).enumerate() {
            let v = eig.eigenvectors.column(k);
            // Sign convention: the largest-magnitude entry is non-negative.
            let pivot = (0..d).fold(0, |best, j| if v[j].abs() > v[best].abs() { j } else { best });
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for (dst, x) in components.row_mut(r).iter_mut().zip(v.iter()) {
                *dst = sign * x;
            }
            eigenvalues.push(eig.eigenvalues[k]);
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.rows()
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: features.cols(),
            });
        }
        let k = self.dim();
        let mut out = Matrix::zeros(features.rows(), k);
        for i in 0..features.rows() {
            let row = features.row(i);
            for c in 0..k {
                out.row_mut(i)[c] = self
                    .components
                    .row(c)
                    .iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum();
            }
        }
        Ok(out)
    }

    /// Maps projected rows back into feature space.
    pub fn inverse_transform(&self, projected: &Matrix) -> Matrix {
        let d = self.mean.len();
        let mut out = Matrix::zeros(projected.rows(), d);
        for i in 0..projected.rows() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.mean);
            for (c, z) in projected.row(i).iter().enumerate() {
                for (o, w) in dst.iter_mut().zip(self.components.row(c)) {
                    *o += z * w;
                }
            }
        }
        out
    }
}

/// Centers the columns and projects onto the leading principal components.
pub fn reduce_dim(features: &Matrix, target_dim: usize) -> Result<Matrix> {
    PcaModel::fit(features, target_dim)?.transform(features)
}

/// Column means and standard deviations fitted on one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &Matrix) -> Self {
        let (n, d) = (features.rows(), features.cols());
        let nf = n.max(1) as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| features.get(i, j)).sum::<f64>() / nf)
            .collect();
        let sd = (0..d)
            .map(|j| {
                let var = (0..n).map(|i| (features.get(i, j) - mean[j]).powi(2)).sum::<f64>() / nf;
                var.sqrt()
            })
            .collect();
        Self { mean, sd }
    }

    /// Z-scores; columns that were constant at fit time become zero.
    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: features.cols(),
            });
        }
        let mut out = features.clone();
        for i in 0..out.rows() {
            for (j, x) in out.row_mut(i).iter_mut().enumerate() {
                *x = if self.sd[j] > 0.0 { (*x - self.mean[j]) / self.sd[j] } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// Per-column z-score; constant columns become zero.
pub fn standardize(features: &Matrix) -> Matrix {
    Standardizer::fit(features)
        .transform(features)
        .expect("fitted on the same matrix")
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn full_rank_2d_is_an_isometry() {
        let pts = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![3.0, 1.0],
            vec![-1.0, 2.0],
            vec![4.0, -2.0],
        ])
        .unwrap();
        let z = reduce_dim(&pts, 2).unwrap();
        assert_eq!(z.cols(), 2);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(dist(z.row(i), z.row(j)), dist(pts.row(i), pts.row(j)), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rank_one_data_yields_one_component() {
        let pts = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![-1.0, -2.0, -3.0],
        ])
        .unwrap();
        assert_eq!(reduce_dim(&pts, 3).unwrap().cols(), 1);
    }

    #[test]
    fn collinear_points_in_5d() {
        // Points a + t*u at t = 0, 1, 3. The only component is u/|u| (its
        // largest entry, 3, is positive) so projections are (t - 4/3)*|u|.
        let u = [1.0, 2.0, 0.0, -1.0, 3.0];
        let a = [5.0, -1.0, 2.0, 0.5, 1.0];
        let norm = 15f64.sqrt();
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 3.0]
            .iter()
            .map(|t| a.iter().zip(&u).map(|(x, y)| x + t * y).collect())
            .collect();
        let z = reduce_dim(&Matrix::from_rows(&rows).unwrap(), 2).unwrap();
        assert_eq!(z.cols(), 1);
        for (i, t) in [0.0, 1.0, 3.0].iter().enumerate() {
            assert_relative_eq!(z.get(i, 0), (t - 4.0 / 3.0) * norm, epsilon = 1e-9);
        }
        let d01 = (z.get(1, 0) - z.get(0, 0)).abs();
        let d12 = (z.get(2, 0) - z.get(1, 0)).abs();
        assert_relative_eq!(d12 / d01, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let one = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(reduce_dim(&one, 1).is_err());
        let constant = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(reduce_dim(&constant, 1).is_err());
        let ok = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 2.0]]).unwrap();
        assert!(reduce_dim(&ok, 3).is_err());
    }

    #[test]
    fn standardize_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let s = standardize(&m);
        assert_eq!(s.row(0), &[-1.0, 0.0]);
        assert_eq!(s.row(1), &[1.0, 0.0]);
    }

    fn reconstruction_error(m: &Matrix, k: usize) -> f64 {
        let model = PcaModel::fit(m, k).unwrap();
        let back = model.inverse_transform(&model.transform(m).unwrap());
        m.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).powi(2)).sum()
    }

    proptest! {
        #[test]
        fn components_orthonormal_and_error_monotone(
            data in proptest::collection::vec(-5.0f64..5.0, 6 * 4),
        ) {
            let m = Matrix::new(6, 4, data).unwrap();
            let model = PcaModel::fit(&m, 4).unwrap();
            let c = &model.components;
            for a in 0..c.rows() {
                for b in 0..c.rows() {
                    let dot: f64 = c.row(a).iter().zip(c.row(b)).map(|(x, y)| x * y).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((dot - expect).abs() < 1e-8);
                }
            }
            let errs: Vec<f64> = (1..=4).map(|k| reconstruction_error(&m, k)).collect();
            for w in errs.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}
