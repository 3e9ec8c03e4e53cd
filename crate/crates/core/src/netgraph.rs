//! Symmetric mutual-k-NN network graph under cosine similarity.

use std::cmp::Ordering;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Undirected, unweighted graph over observations.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    n: usize,
    k: usize,
    /// Sorted, each pair stored once as `(u, v)` with `u < v`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    /// Rows whose feature vector was all zeros; always isolated.
    zero_vectors: Vec<usize>,
}

impl NetworkGraph {
    /// Builds a graph from an arbitrary edge list. Rejects self-loops,
    /// duplicates (in either orientation) and out-of-range endpoints.
    pub fn from_edges(n: usize, k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at vertex {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate edge {:?}", w[0])));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &norm {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(Self {
            n,
            k,
            edges: norm,
            adjacency,
            zero_vectors: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.adjacency[v].is_empty()
    }

    pub fn zero_vectors(&self) -> &[usize] {
        &self.zero_vectors
    }

    /// Writes the edge list as `u,v` CSV.
    pub fn write_edges_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["u", "v"]).map_err(csv_err)?;
        for &(u, v) in &self.edges {
            w.write_record([u.to_string(), v.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a `u,v` edge list for a graph of `n` vertices.
    pub fn read_edges_csv(path: impl AsRef<Path>, n: usize, k: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut edges = Vec::new();
        for rec in r.deserialize::<(usize, usize)>() {
            edges.push(rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?);
        }
        Self::from_edges(n, k, &edges)
    }
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine_with_norms(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    // `+ 0.0` folds -0.0 into 0.0 so orthogonal ties order by index.
    (dot / (na * nb)).clamp(-1.0, 1.0) + 0.0
}

/// `dot(a, b) / (|a| |b|)`; a zero vector has similarity 0 to everything.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(cosine_with_norms(a, b, norm(a), norm(b)))
}

/// `max(2, ceil(fraction * n))`.
pub fn default_k(n: usize, fraction: f64) -> usize {
    // Shave float noise so 0.02 * 400 stays 8 rather than ceil(8.000000001).
    let raw = fraction * n as f64;
    let k = (raw - raw.abs() * 1e-12).ceil();
    (k.max(0.0) as usize).max(2)
}

/// Similarity-descending order, ties to the lower index.
fn by_similarity(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `k` most similar other rows of row `i`, sorted by index.
fn nearest(features: &Matrix, norms: &[f64], i: usize, k: usize) -> Vec<usize> {
    let a = features.row(i);
    let mut sims: Vec<(f64, usize)> = (0..features.rows())
        .filter(|&j| j != i)
        .map(|j| (cosine_with_norms(a, features.row(j), norms[i], norms[j]), j))
        .collect();
    if k < sims.len() {
        sims.select_nth_unstable_by(k - 1, by_similarity);
        sims.truncate(k);
    }
    let mut out: Vec<usize> = sims.into_iter().map(|(_, j)| j).collect();
    out.sort_unstable();
    out
}

/// Directed k-NN lists, one sorted list per row.
pub fn knn_lists(features: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = features.rows();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    let norms: Vec<f64> = features.iter_rows().map(norm).collect();
    #[cfg(feature = "parallel")]
    let lists = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| nearest(features, &norms, i, k))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let lists = (0..n).map(|i| nearest(features, &norms, i, k)).collect();
    Ok(lists)
}

/// Mutual k-NN graph: `(u, v)` is an edge iff each is among the other's
/// `k` most cosine-similar rows. Zero rows stay isolated.
pub fn knn_graph(features: &Matrix, k: usize) -> Result<NetworkGraph> {
    let lists = knn_lists(features, k)?;
    let zero_vectors: Vec<usize> = (0..features.rows())
        .filter(|&i| features.row(i).iter().all(|x| *x == 0.0))
        .collect();
    let is_zero = |v: usize| zero_vectors.binary_search(&v).is_ok();
    let mut edges = Vec::new();
    for (u, list) in lists.iter().enumerate() {
        if is_zero(u) {
            continue;
        }
        for &v in list {
            if v > u && !is_zero(v) && lists[v].binary_search(&u).is_ok() {
                edges.push((u, v));
            }
        }
    }
    if !zero_vectors.is_empty() {
        log::warn!("{} zero feature vectors left isolated", zero_vectors.len());
    }
    let mut g = NetworkGraph::from_edges(features.rows(), k, &edges)?;
    g.zero_vectors = zero_vectors;
    Ok(g)
}
