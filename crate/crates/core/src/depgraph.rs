//! Cluster statistics and the weighted directed dependency graph.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cci::{edge_counts, Partition};
use crate::error::{Error, Result};
use crate::netgraph::NetworkGraph;

fn check_cover(g: &NetworkGraph, p: &Partition) -> Result<()> {
    if p.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: g.n(),
        });
    }
    Ok(())
}

/// Number of network edges with one end in `C_i` and the other in `C_j`.
pub fn cut(g: &NetworkGraph, p: &Partition, i: usize, j: usize) -> Result<u64> {
    p.check_id(i)?;
    p.check_id(j)?;
    if i == j {
        return Err(Error::InvalidInput("cut needs two distinct clusters".into()));
    }
    check_cover(g, p)?;
    let (a, b) = (i, j);
    Ok(g.edges()
        .iter()
        .filter(|&&(u, v)| {
            let (cu, cv) = (p.cluster(u), p.cluster(v));
            (cu == a && cv == b) || (cu == b && cv == a)
        })
        .count() as u64)
}

/// Number of network edges with both ends in `C_i`.
pub fn density(g: &NetworkGraph, p: &Partition, i: usize) -> Result<u64> {
    p.check_id(i)?;
    check_cover(g, p)?;
    Ok(g.edges()
        .iter()
        .filter(|&&(u, v)| p.cluster(u) == i && p.cluster(v) == i)
        .count() as u64)
}

/// Number of vertices in `C_i`.
pub fn size(p: &Partition, i: usize) -> Result<usize> {
    p.check_id(i)?;
    Ok(p.cluster_of().iter().filter(|&&c| c == i).count())
}

/// Complete weighted directed graph over clusters.
///
/// Vertex weight `w_i = density(C_i) / size(C_i)`; edge weight
/// `w_ij = cut(C_i, C_j) / size(C_j)`, normalised by the head cluster, so
/// `w_ij != w_ji` in general.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    vertex_weights: Vec<f64>,
    /// `m x m`, diagonal unused and zero.
    edge_weights: Vec<Vec<f64>>,
    class_ids: Option<Vec<usize>>,
}

impl DependencyGraph {
    pub fn new(
        vertex_weights: Vec<f64>,
        edge_weights: Vec<Vec<f64>>,
        class_ids: Option<Vec<usize>>,
    ) -> Result<Self> {
        let m = vertex_weights.len();
        if m == 0 {
            return Err(Error::InvalidInput("dependency graph needs a vertex".into()));
        }
        if edge_weights.len() != m || edge_weights.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput(format!(
                "edge weights must be {m}x{m}"
            )));
        }
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !vertex_weights.iter().copied().all(ok) {
            return Err(Error::InvalidInput("vertex weights must be finite and non-negative".into()));
        }
        for (i, row) in edge_weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if i != j && !ok(w) {
                    return Err(Error::InvalidInput(format!(
                        "edge weight ({i}, {j}) = {w} must be finite and non-negative"
                    )));
                }
            }
        }
        if let Some(c) = &class_ids {
            if c.len() != m {
                return Err(Error::LengthMismatch {
                    left: c.len(),
                    right: m,
                });
            }
        }
        let mut edge_weights = edge_weights;
        for (i, row) in edge_weights.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Ok(Self {
            vertex_weights,
            edge_weights,
            class_ids,
        })
    }

    pub fn m(&self) -> usize {
        self.vertex_weights.len()
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn vertex_weight(&self, i: usize) -> f64 {
        self.vertex_weights[i]
    }

    /// Weight of the directed edge `i -> j`, `i != j`.
    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        self.edge_weights[i][j]
    }

    /// Directed edges `(i, j)`, `i != j`, in row-major order.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m();
        (0..m).flat_map(move |i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn class_ids(&self) -> Option<&[usize]> {
        self.class_ids.as_deref()
    }

    pub fn with_class_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.m() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: self.m(),
            });
        }
        self.class_ids = Some(ids);
        Ok(self)
    }

    /// Relabels vertices: vertex `i` of the result is vertex `perm[i]` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m = self.m();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..m).collect::<Vec<_>>() {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        let vw = perm.iter().map(|&p| self.vertex_weights[p]).collect();
        let ew = (0..m)
            .map(|i| (0..m).map(|j| self.edge_weights[perm[i]][perm[j]]).collect())
            .collect();
        let ids = self
            .class_ids
            .as_ref()
            .map(|c| perm.iter().map(|&p| c[p]).collect());
        Self::new(vw, ew, ids)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DependencyGraphJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: DependencyGraphJson = serde_json::from_str(s)?;
        wire.try_into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&s)
    }
}

#[derive(Serialize, Deserialize)]
struct DependencyGraphJson {
    m: usize,
    vertex_weights: Vec<f64>,
    edge_weights: Vec<(usize, usize, f64)>,
    class_ids: Option<Vec<usize>>,
}

impl From<&DependencyGraph> for DependencyGraphJson {
    fn from(g: &DependencyGraph) -> Self {
        Self {
            m: g.m(),
            vertex_weights: g.vertex_weights.clone(),
            edge_weights: g
                .directed_edges()
                .map(|(i, j)| (i, j, g.edge_weight(i, j)))
                .collect(),
            class_ids: g.class_ids.clone(),
        }
    }
}

impl TryFrom<DependencyGraphJson> for DependencyGraph {
    type Error = Error;

    fn try_from(w: DependencyGraphJson) -> Result<Self> {
        if w.vertex_weights.len() != w.m {
            return Err(Error::LengthMismatch {
                left: w.vertex_weights.len(),
                right: w.m,
            });
        }
        let mut ew = vec![vec![0.0; w.m]; w.m];
        let mut seen = vec![vec![false; w.m]; w.m];
        for (i, j, x) in w.edge_weights {
            if i >= w.m || j >= w.m || i == j || seen[i][j] {
                return Err(Error::InvalidInput(format!("bad edge entry ({i}, {j})")));
            }
            seen[i][j] = true;
            ew[i][j] = x;
        }
        let expected = w.m * w.m.saturating_sub(1);
        let found = seen.iter().flatten().filter(|s| **s).count();
        if found != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} edge weights, found {found}"
            )));
        }
        DependencyGraph::new(w.vertex_weights, ew, w.class_ids)
    }
}

/// Dependency graph of a partition of the network graph.
pub fn build_dependency_graph(g: &NetworkGraph, p: &Partition) -> Result<DependencyGraph> {
    check_cover(g, p)?;
    let sizes = p.sizes();
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidInput(format!("cluster {i} is empty")));
    }
    let (dens, cuts) = edge_counts(g, p);
    let m = p.k();
    let vertex_weights = (0..m).map(|i| dens[i] as f64 / sizes[i] as f64).collect();
    let edge_weights = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 0.0 } else { cuts[i][j] as f64 / sizes[j] as f64 })
                .collect()
        })
        .collect();
    DependencyGraph::new(vertex_weights, edge_weights, None)
}

/// Dependency graph of the ground-truth class partition; class ids are
/// compacted in ascending order and recorded on the graph.
pub fn from_labels(g: &NetworkGraph, labels: &[usize]) -> Result<DependencyGraph> {
    if labels.len() != g.n() {
        return Err(Error::MissingLabels(format!(
            "{} labels for {} vertices",
            labels.len(),
            g.n()
        )));
    }
    let (p, ids) = Partition::compact(labels);
    build_dependency_graph(g, &p)?.with_class_ids(ids)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn two_triangles() -> (NetworkGraph, Partition) {
        let e = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
        (
            NetworkGraph::from_edges(6, 2, &e).unwrap(),
            Partition::new(vec![0, 0, 0, 1, 1, 1]).unwrap(),
        )
    }

    #[test]
    fn statistics_on_fixture() {
        let (g, p) = two_triangles();
        assert_eq!(cut(&g, &p, 0, 1).unwrap(), 1);
        assert_eq!(cut(&g, &p, 1, 0).unwrap(), 1);
        assert_eq!(density(&g, &p, 0).unwrap(), 3);
        assert_eq!(size(&p, 1).unwrap(), 3);
        assert!(matches!(cut(&g, &p, 0, 2), Err(Error::InvalidCluster { .. })));
        assert!(density(&g, &p, 5).is_err());
        assert!(size(&p, 2).is_err());

        let g0 = NetworkGraph::from_edges(6, 2, &[(0, 1), (3, 4)]).unwrap();
        assert_eq!(cut(&g0, &p, 0, 1).unwrap(), 0);
    }

    #[test]
    fn singleton_and_cycle_density() {
        let g = NetworkGraph::from_edges(5, 2, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let p = Partition::new(vec![0, 0, 0, 0, 1]).unwrap();
        assert_eq!(density(&g, &p, 0).unwrap(), 4);
        assert_eq!(density(&g, &p, 1).unwrap(), 0);
        assert_eq!(size(&p, 1).unwrap(), 1);
        assert_eq!(size(&p, 0).unwrap() + size(&p, 1).unwrap(), 5);
    }

    #[test]
    fn weights_on_fixture() {
        let (g, p) = two_triangles();
        let d = build_dependency_graph(&g, &p).unwrap();
        assert_eq!(d.vertex_weights(), &[1.0, 1.0]);
        assert_eq!(d.edge_weight(0, 1), 1.0 / 3.0);
        assert_eq!(d.edge_weight(1, 0), 1.0 / 3.0);
    }

    #[test]
    fn asymmetric_edge_weights() {
        // Cluster 0: 3 vertices, cluster 1: 6 vertices, two cut edges.
        let g = NetworkGraph::from_edges(9, 2, &[(0, 3), (1, 4)]).unwrap();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1, 1, 1, 1]).unwrap();
        let d = build_dependency_graph(&g, &p).unwrap();
        assert_relative_eq!(d.edge_weight(0, 1), 1.0 / 3.0);
        assert_relative_eq!(d.edge_weight(1, 0), 2.0 / 3.0);
    }

    #[test]
    fn edgeless_singletons_weigh_nothing() {
        let g = NetworkGraph::from_edges(3, 1, &[]).unwrap();
        let d = build_dependency_graph(&g, &Partition::singletons(3)).unwrap();
        assert!(d.vertex_weights().iter().all(|w| *w == 0.0));
        assert!(d.directed_edges().all(|(i, j)| d.edge_weight(i, j) == 0.0));
    }

    #[test]
    fn from_labels_compacts_gaps() {
        let (g, p) = two_triangles();
        let d = from_labels(&g, &[0, 0, 0, 2, 2, 2]).unwrap();
        assert_eq!(d.m(), 2);
        assert_eq!(d.class_ids(), Some(&[0usize, 2][..]));
        let plain = build_dependency_graph(&g, &p).unwrap();
        assert_eq!(d.vertex_weights(), plain.vertex_weights());
        assert!(from_labels(&g, &[0, 1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (g, _) = two_triangles();
        let d = from_labels(&g, &[0, 0, 0, 2, 2, 2]).unwrap();
        let s = d.to_json().unwrap();
        assert!(s.contains("\"vertex_weights\""));
        assert_eq!(DependencyGraph::from_json(&s).unwrap(), d);
        assert!(DependencyGraph::from_json(r#"{"m":2,"vertex_weights":[1,1],"edge_weights":[[0,1,0.5]],"class_ids":null}"#).is_err());
    }

    fn graph_and_partition() -> impl Strategy<Value = (NetworkGraph, Partition)> {
        (2usize..12, 1usize..5).prop_flat_map(|(n, k)| {
            (
                proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
                proptest::collection::vec(0..k, n),
            )
                .prop_map(move |(bits, raw)| {
                    let mut e = Vec::new();
                    let mut it = bits.into_iter();
                    for u in 0..n {
                        for v in u + 1..n {
                            if it.next().unwrap() {
                                e.push((u, v));
                            }
                        }
                    }
                    (
                        NetworkGraph::from_edges(n, 1, &e).unwrap(),
                        Partition::compact(&raw).0,
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn matches_double_loop_oracle((g, p) in graph_and_partition()) {
            let n = g.n();
            let m = p.k();
            let mut dens = vec![0u64; m];
            let mut cuts = vec![vec![0u64; m]; m];
            let mut size = vec![0u64; m];
            for u in 0..n {
                size[p.cluster(u)] += 1;
                for v in u + 1..n {
                    if g.has_edge(u, v) {
                        let (a, b) = (p.cluster(u), p.cluster(v));
                        if a == b { dens[a] += 1 } else { cuts[a][b] += 1; cuts[b][a] += 1 }
                    }
                }
            }
            let d = build_dependency_graph(&g, &p).unwrap();
            for i in 0..m {
                prop_assert_eq!(d.vertex_weight(i), dens[i] as f64 / size[i] as f64);
                prop_assert_eq!(density(&g, &p, i).unwrap(), dens[i]);
                for j in 0..m {
                    if i != j {
                        prop_assert_eq!(d.edge_weight(i, j), cuts[i][j] as f64 / size[j] as f64);
                        prop_assert_eq!(cut(&g, &p, i, j).unwrap(), cuts[i][j]);
                        prop_assert_eq!(d.edge_weight(i, j) == 0.0, cuts[i][j] == 0);
                    }
                }
            }
            let total: u64 = dens.iter().sum::<u64>()
                + (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).map(|(i, j)| cuts[i][j]).sum::<u64>();
            prop_assert_eq!(total as usize, g.edge_count());
        }

        #[test]
        fn vertex_weights_follow_relabeling((g, p) in graph_and_partition()) {
            let m = p.k();
            let relabel: Vec<usize> = (0..m).rev().collect();
            let q = Partition::new(p.cluster_of().iter().map(|&c| relabel[c]).collect()).unwrap();
            let a = build_dependency_graph(&g, &p).unwrap();
            let b = build_dependency_graph(&g, &q).unwrap();
            for i in 0..m {
                prop_assert_eq!(a.vertex_weight(i), b.vertex_weight(relabel[i]));
            }
        }
    }
}
