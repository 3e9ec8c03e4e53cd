use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a node on one shore of a bipartite cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    Vertex(usize),
    Edge(usize, usize),
    Dummy,
}

/// Rows are target-side nodes, columns source-side nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_tags: Vec<NodeTag>,
    col_tags: Vec<NodeTag>,
}

impl CostMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        row_tags: Vec<NodeTag>,
        col_tags: Vec<NodeTag>,
    ) -> Result<Self> {
        if data.len() != rows * cols || row_tags.len() != rows || col_tags.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::BadCost {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                    value,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            data,
            row_tags,
            col_tags,
        })
    }

    /// Untagged-as-vertices square matrix from rows, handy for tests and demos.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged cost matrix".into()));
        }
        Self::new(
            r,
            c,
            rows.concat(),
            (0..r).map(NodeTag::Vertex).collect(),
            (0..c).map(NodeTag::Vertex).collect(),
        )
    }

    pub fn empty() -> Self {
        Self {
            rows: 0,
            cols: 0,
            data: Vec::new(),
            row_tags: Vec::new(),
            col_tags: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row_tags(&self) -> &[NodeTag] {
        &self.row_tags
    }

    pub fn col_tags(&self) -> &[NodeTag] {
        &self.col_tags
    }
}

/// Appends zero-cost dummy rows or columns until the matrix is square.
pub fn pad_dummies(c: &CostMatrix) -> CostMatrix {
    let n = c.rows.max(c.cols);
    if c.is_square() {
        return c.clone();
    }
    let mut data = vec![0.0; n * n];
    for r in 0..c.rows {
        data[r * n..r * n + c.cols].copy_from_slice(&c.data[r * c.cols..(r + 1) * c.cols]);
    }
    let mut row_tags = c.row_tags.clone();
    row_tags.resize(n, NodeTag::Dummy);
    let mut col_tags = c.col_tags.clone();
    col_tags.resize(n, NodeTag::Dummy);
    CostMatrix {
        rows: n,
        cols: n,
        data,
        row_tags,
        col_tags,
    }
}

/// Perfect matching: `pairs[row] = col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<usize>,
    pub total_cost: f64,
}

/// Minimum-cost perfect matching in `O(n^3)` (shortest augmenting paths
/// with row and column potentials). Rows are inserted in index order and
/// the first minimal column wins every scan, so results are deterministic.
/// The total is summed in row order.
pub fn assignment_solve(c: &CostMatrix) -> Result<Assignment> {
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows,
            cols: c.cols,
        });
    }
    let n = c.rows;
    let a = |i: usize, j: usize| c.data[(i - 1) * n + (j - 1)];
    // 1-based with index 0 as the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs = vec![0; n];
    for j in 1..=n {
        pairs[owner[j] - 1] = j - 1;
    }
    let total_cost = pairs.iter().enumerate().map(|(r, &col)| c.get(r, col)).sum();
    Ok(Assignment { pairs, total_cost })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn brute_force(c: &CostMatrix) -> f64 {
        fn rec(c: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == c.rows() {
                *best = best.min(acc);
                return;
            }
            for col in 0..c.cols() {
                if !used[col] {
                    used[col] = true;
                    rec(c, row + 1, used, acc + c.get(row, col), best);
                    used[col] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, 0, &mut vec![false; c.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn diagonal_dominance() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let a = assignment_solve(&c).unwrap();
        assert_eq!(a.pairs, vec![0, 1]);
        assert_eq!(a.total_cost, 2.0);
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let c = CostMatrix::from_rows(&vec![vec![0.0; 4]; 4]).unwrap();
        let a = assignment_solve(&c).unwrap();
        assert_eq!(a.pairs, vec![0, 1, 2, 3]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn anti_diagonal() {
        let c = CostMatrix::from_rows(&[
            vec![9.0, 9.0, 1.0],
            vec![9.0, 1.0, 9.0],
            vec![1.0, 9.0, 9.0],
        ])
        .unwrap();
        assert_eq!(assignment_solve(&c).unwrap().pairs, vec![2, 1, 0]);
    }

    #[test]
    fn empty_and_invalid() {
        let a = assignment_solve(&CostMatrix::empty()).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!(a.total_cost, 0.0);
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(assignment_solve(&c), Err(Error::NotSquare { rows: 1, cols: 3 })));
        assert!(CostMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(CostMatrix::from_rows(&[vec![-1.0]]).is_err());
    }

    #[test]
    fn padding() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let p = pad_dummies(&c);
        assert_eq!((p.rows(), p.cols()), (3, 3));
        assert_eq!(p.row_tags()[2], NodeTag::Dummy);
        assert_eq!((0..3).map(|j| p.get(2, j)).sum::<f64>(), 0.0);
        assert_eq!(p.get(1, 2), 6.0);

        let wide = CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let p = pad_dummies(&wide);
        assert_eq!(p.rows(), 4);
        assert_eq!(p.row_tags().iter().filter(|t| **t == NodeTag::Dummy).count(), 3);

        let sq = CostMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(pad_dummies(&sq), sq);
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle(n in 1usize..=6, seed in proptest::collection::vec(0.0f64..1.0, 36)) {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| seed[i * n..(i + 1) * n].to_vec()).collect();
            let c = CostMatrix::from_rows(&rows).unwrap();
            let a = assignment_solve(&c).unwrap();
            let mut cols = a.pairs.clone();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(a.total_cost, brute_force(&c));
        }

        #[test]
        fn integer_costs_with_ties(n in 1usize..=6, seed in proptest::collection::vec(0u8..3, 36)) {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| seed[i * n..(i + 1) * n].iter().map(|&x| f64::from(x)).collect()).collect();
            let c = CostMatrix::from_rows(&rows).unwrap();
            prop_assert_eq!(assignment_solve(&c).unwrap().total_cost, brute_force(&c));
        }
    }
}
