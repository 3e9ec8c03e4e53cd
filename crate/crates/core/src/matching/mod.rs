//! Two-tier minimum-cost mapping of a target dependency graph onto a
//! source dependency graph.
//!
//! Vertex weights and directed edge weights are matched separately by
//! `|w_t - w_s|`; every matched pair votes for the clusters it pairs, and a
//! final assignment minimises `sum(1 - mu(i, j) / M)` over the votes.

mod assignment;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cci::Partition;
use crate::depgraph::DependencyGraph;
use crate::error::{Error, Result};

pub use assignment::{assignment_solve, pad_dummies, Assignment, CostMatrix, NodeTag};

fn abs_diff_matrix(
    target: &[(NodeTag, f64)],
    source: &[(NodeTag, f64)],
) -> Result<CostMatrix> {
    let data = target
        .iter()
        .flat_map(|(_, wt)| source.iter().map(move |(_, ws)| (wt - ws).abs()))
        .collect();
    let c = CostMatrix::new(
        target.len(),
        source.len(),
        data,
        target.iter().map(|(t, _)| *t).collect(),
        source.iter().map(|(t, _)| *t).collect(),
    )?;
    Ok(pad_dummies(&c))
}

/// Vertex-component costs `|w_t(i) - w_s(j)|`, padded square.
pub fn vertex_bipartite(gt: &DependencyGraph, gs: &DependencyGraph) -> Result<CostMatrix> {
    let side = |g: &DependencyGraph| -> Vec<(NodeTag, f64)> {
        (0..g.m()).map(|i| (NodeTag::Vertex(i), g.vertex_weight(i))).collect()
    };
    abs_diff_matrix(&side(gt), &side(gs))
}

/// Directed-edge-component costs `|w_t(i,j) - w_s(k,l)|`, padded square.
/// Empty when either graph has a single vertex.
pub fn edge_bipartite(gt: &DependencyGraph, gs: &DependencyGraph) -> Result<CostMatrix> {
    if gt.m() < 2 || gs.m() < 2 {
        return Ok(CostMatrix::empty());
    }
    let side = |g: &DependencyGraph| -> Vec<(NodeTag, f64)> {
        g.directed_edges()
            .map(|(i, j)| (NodeTag::Edge(i, j), g.edge_weight(i, j)))
            .collect()
    };
    abs_diff_matrix(&side(gt), &side(gs))
}

/// Vote counts from the component-level mappings.
#[derive(Debug, Clone, PartialEq)]
pub struct Consensus {
    /// `mu[i][j]`: votes for target cluster `i` taking source vertex `j`.
    pub mu: Vec<Vec<u64>>,
    /// Total number of votes.
    pub total: u64,
    /// `1 - mu / M`, padded square.
    pub cost: CostMatrix,
}

/// Tallies votes: one per matched vertex pair and one per endpoint of each
/// matched directed edge pair (`(a,b) -> (c,d)` votes `a -> c` and
/// `b -> d`). Pairs involving dummies are ignored.
pub fn consensus(
    vertex_costs: &CostMatrix,
    vertex_map: &Assignment,
    edge_costs: &CostMatrix,
    edge_map: &Assignment,
    m_t: usize,
    m_s: usize,
) -> Result<Consensus> {
    consensus_with(vertex_costs, vertex_map, edge_costs, edge_map, m_t, m_s, |_, _| false)
}

/// [`consensus`], additionally dropping edge pairs for which `skip` holds.
pub fn consensus_with(
    vertex_costs: &CostMatrix,
    vertex_map: &Assignment,
    edge_costs: &CostMatrix,
    edge_map: &Assignment,
    m_t: usize,
    m_s: usize,
    skip: impl Fn((usize, usize), (usize, usize)) -> bool,
) -> Result<Consensus> {
    let mut mu = vec![vec![0u64; m_s]; m_t];
    let mut total = 0;
    let mut vote = |i: usize, j: usize| -> Result<()> {
        if i >= m_t || j >= m_s {
            return Err(Error::InvalidInput(format!(
                "vote ({i}, {j}) outside {m_t}x{m_s}"
            )));
        }
        mu[i][j] += 1;
        total += 1;
        Ok(())
    };
    for (r, &c) in vertex_map.pairs.iter().enumerate() {
        if let (NodeTag::Vertex(i), NodeTag::Vertex(j)) =
            (vertex_costs.row_tags()[r], vertex_costs.col_tags()[c])
        {
            vote(i, j)?;
        }
    }
    for (r, &c) in edge_map.pairs.iter().enumerate() {
        if let (NodeTag::Edge(a, b), NodeTag::Edge(c2, d)) =
            (edge_costs.row_tags()[r], edge_costs.col_tags()[c])
        {
            if skip((a, b), (c2, d)) {
                continue;
            }
            vote(a, c2)?;
            vote(b, d)?;
        }
    }
    let data = mu
        .iter()
        .flat_map(|row| {
            row.iter().map(move |&v| {
                if total == 0 {
                    1.0
                } else {
                    1.0 - v as f64 / total as f64
                }
            })
        })
        .collect();
    let cost = pad_dummies(&CostMatrix::new(
        m_t,
        m_s,
        data,
        (0..m_t).map(NodeTag::Vertex).collect(),
        (0..m_s).map(NodeTag::Vertex).collect(),
    )?);
    Ok(Consensus { mu, total, cost })
}

/// Target cluster to source class mapping with its vote evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub cluster_to_class: Vec<usize>,
    pub mu: Vec<Vec<u64>>,
    #[serde(rename = "M")]
    pub total_votes: u64,
    /// Target clusters that landed on a dummy source node and were given
    /// the class with the closest vertex weight instead.
    pub low_confidence: Vec<usize>,
}

impl LabelMap {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|source| Error::Io {
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
        Ok(serde_json::from_str(&s)?)
    }
}

fn solve_components(
    bg_e: &CostMatrix,
    bg_v: &CostMatrix,
) -> Result<(Assignment, Assignment)> {
    #[cfg(feature = "parallel")]
    let (me, mv) = rayon::join(|| assignment_solve(bg_e), || assignment_solve(bg_v));
    #[cfg(not(feature = "parallel"))]
    let (me, mv) = (assignment_solve(bg_e), assignment_solve(bg_v));
    Ok((me?, mv?))
}

/// Maps every target cluster to a source class.
pub fn optimal_label_learning(gt: &DependencyGraph, gs: &DependencyGraph) -> Result<LabelMap> {
    let class_ids = gs
        .class_ids()
        .ok_or_else(|| Error::MissingLabels("source dependency graph has no class ids".into()))?;
    let bg_e = edge_bipartite(gt, gs)?;
    let bg_v = vertex_bipartite(gt, gs)?;
    let (me, mv) = solve_components(&bg_e, &bg_v)?;
    // Edges without any cut in both graphs tie at zero cost; their matching
    // is an artefact of tie-breaking, so they cast no votes.
    let absent = |(a, b): (usize, usize), (c, d): (usize, usize)| {
        gt.edge_weight(a, b) == 0.0 && gs.edge_weight(c, d) == 0.0
    };
    let votes = consensus_with(&bg_v, &mv, &bg_e, &me, gt.m(), gs.m(), absent)?;
    let best = assignment_solve(&votes.cost)?;

    let mut cluster_to_class = Vec::with_capacity(gt.m());
    let mut low_confidence = Vec::new();
    for i in 0..gt.m() {
        let j = best.pairs[i];
        let src = if j < gs.m() {
            j
        } else {
            low_confidence.push(i);
            let wt = gt.vertex_weight(i);
            (0..gs.m())
                .min_by(|&a, &b| {
                    (wt - gs.vertex_weight(a))
                        .abs()
                        .total_cmp(&(wt - gs.vertex_weight(b)).abs())
                        .then(a.cmp(&b))
                })
                .expect("source graph is non-empty")
        };
        cluster_to_class.push(class_ids[src]);
    }
    if !low_confidence.is_empty() {
        log::warn!(
            "{} target clusters matched dummy source nodes",
            low_confidence.len()
        );
    }
    Ok(LabelMap {
        cluster_to_class,
        mu: votes.mu,
        total_votes: votes.total,
        low_confidence,
    })
}

/// Gives every observation its cluster's mapped class.
pub fn assign_labels(p: &Partition, lm: &LabelMap) -> Result<Vec<usize>> {
    if lm.cluster_to_class.len() < p.k() {
        return Err(Error::UnmappedCluster(lm.cluster_to_class.len()));
    }
    Ok(p.cluster_of()
        .iter()
        .map(|&c| lm.cluster_to_class[c])
        .collect())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn graph(vw: &[f64], ew: &[&[f64]], ids: Option<Vec<usize>>) -> DependencyGraph {
        DependencyGraph::new(vw.to_vec(), ew.iter().map(|r| r.to_vec()).collect(), ids).unwrap()
    }

    fn fixture3() -> DependencyGraph {
        graph(
            &[1.0, 2.5, 0.25],
            &[&[0.0, 0.1, 0.2], &[0.3, 0.0, 0.4], &[0.5, 0.6, 0.0]],
            Some(vec![0, 1, 2]),
        )
    }

    /// Random graph whose vertex weights and edge weights are all distinct.
    pub(crate) fn random_distinct(m: usize, rng: &mut ChaCha8Rng) -> DependencyGraph {
        let mut vals: Vec<f64> = (0..m * m).map(|i| i as f64 + rng.random_range(0.0..0.5)).collect();
        vals.shuffle(rng);
        let vw = vals[..m].to_vec();
        let mut it = vals[m..].iter();
        let ew = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else { *it.next().unwrap() }).collect())
            .collect();
        DependencyGraph::new(vw, ew, Some((0..m).collect())).unwrap()
    }

    #[test]
    fn vertex_costs() {
        let g = fixture3();
        let c = vertex_bipartite(&g, &g).unwrap();
        assert!((0..3).all(|i| c.get(i, i) == 0.0));
        let t = graph(&[1.0], &[&[0.0]], None);
        let s = graph(&[0.25], &[&[0.0]], None);
        let c = vertex_bipartite(&t, &s).unwrap();
        assert_eq!((c.rows(), c.get(0, 0)), (1, 0.75));
        let t2 = graph(&[1.0, 2.0], &[&[0.0, 1.0], &[1.0, 0.0]], None);
        let c = vertex_bipartite(&t2, &g).unwrap();
        assert_eq!((c.rows(), c.cols()), (3, 3));
        assert_eq!(c.row_tags()[2], NodeTag::Dummy);
    }

    #[test]
    fn edge_costs() {
        let g = fixture3();
        let c = edge_bipartite(&g, &g).unwrap();
        assert_eq!((c.rows(), c.cols()), (6, 6));
        assert_eq!(assignment_solve(&c).unwrap().total_cost, 0.0);
        let g2 = graph(&[1.0, 2.0], &[&[0.0, 1.0], &[3.0, 0.0]], None);
        let c = edge_bipartite(&g2, &g2).unwrap();
        assert_eq!(c.row_tags(), &[NodeTag::Edge(0, 1), NodeTag::Edge(1, 0)]);
        let single = graph(&[1.0], &[&[0.0]], None);
        assert_eq!(edge_bipartite(&single, &g).unwrap().rows(), 0);
    }

    fn votes_for(g: &DependencyGraph) -> Consensus {
        let bv = vertex_bipartite(g, g).unwrap();
        let be = edge_bipartite(g, g).unwrap();
        let mv = assignment_solve(&bv).unwrap();
        let me = assignment_solve(&be).unwrap();
        consensus(&bv, &mv, &be, &me, g.m(), g.m()).unwrap()
    }

    #[test]
    fn consensus_three_identical() {
        // Each vertex: one vertex vote plus two outgoing and two incoming
        // edge endpoints = 5; 3 vertex votes + 6 edges x 2 = 15 in total.
        let c = votes_for(&fixture3());
        assert_eq!(c.total, 15);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 5 } else { 0 };
                assert_eq!(c.mu[i][j], expected);
                let cost = if i == j { 2.0 / 3.0 } else { 1.0 };
                assert_relative_eq!(c.cost.get(i, j), cost);
            }
        }
    }

    #[test]
    fn consensus_two_identical() {
        let g = graph(&[1.0, 2.0], &[&[0.0, 1.0], &[3.0, 0.0]], Some(vec![0, 1]));
        let c = votes_for(&g);
        assert_eq!(c.total, 6);
        assert_eq!(c.mu, vec![vec![3, 0], vec![0, 3]]);
    }

    #[test]
    fn consensus_with_skips_edge_pairs() {
        let g = fixture3();
        let bv = vertex_bipartite(&g, &g).unwrap();
        let be = edge_bipartite(&g, &g).unwrap();
        let mv = assignment_solve(&bv).unwrap();
        let me = assignment_solve(&be).unwrap();
        let all = consensus_with(&bv, &mv, &be, &me, 3, 3, |_, _| true).unwrap();
        assert_eq!(all.total, 3);
        assert_eq!(all.mu, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let from_zero = consensus_with(&bv, &mv, &be, &me, 3, 3, |(a, _), _| a == 0).unwrap();
        assert_eq!(from_zero.total, 3 + 2 * 4);
    }

    #[test]
    fn consensus_single_vertex() {
        let g = graph(&[1.0], &[&[0.0]], Some(vec![4]));
        let c = votes_for(&g);
        assert_eq!((c.total, c.mu.clone()), (1, vec![vec![1]]));
        let lm = optimal_label_learning(&g, &g).unwrap();
        assert_eq!(lm.cluster_to_class, vec![4]);
    }

    #[test]
    fn self_map_is_identity() {
        let g = fixture3();
        let lm = optimal_label_learning(&g, &g).unwrap();
        assert_eq!(lm.cluster_to_class, vec![0, 1, 2]);
        assert_eq!(lm.total_votes, lm.mu.iter().flatten().sum::<u64>());
        assert!(lm.low_confidence.is_empty());
    }

    #[test]
    fn recovers_known_permutation() {
        let gs = fixture3();
        let perm = [2, 0, 1];
        let gt = gs.permuted(&perm).unwrap();
        let lm = optimal_label_learning(&gt, &gs).unwrap();
        assert_eq!(lm.cluster_to_class, perm.to_vec());
    }

    #[test]
    fn fewer_target_clusters_use_subset() {
        let gs = fixture3();
        let gt = graph(&[2.4, 0.3], &[&[0.0, 0.4], &[0.6, 0.0]], None);
        let lm = optimal_label_learning(&gt, &gs).unwrap();
        assert_eq!(lm.cluster_to_class.len(), 2);
        assert_ne!(lm.cluster_to_class[0], lm.cluster_to_class[1]);
        assert!(lm.cluster_to_class.iter().all(|c| *c < 3));
    }

    #[test]
    fn surplus_target_clusters_flagged() {
        let gs = graph(&[1.0, 3.0], &[&[0.0, 1.0], &[2.0, 0.0]], Some(vec![5, 9]));
        let gt = fixture3();
        let lm = optimal_label_learning(&gt, &gs).unwrap();
        assert_eq!(lm.cluster_to_class.len(), 3);
        assert_eq!(lm.low_confidence.len(), 1);
        assert!(lm.cluster_to_class.iter().all(|c| *c == 5 || *c == 9));
    }

    #[test]
    fn needs_source_class_ids() {
        let g = graph(&[1.0], &[&[0.0]], None);
        assert!(matches!(optimal_label_learning(&g, &g), Err(Error::MissingLabels(_))));
    }

    #[test]
    fn label_assignment() {
        let lm = |map: Vec<usize>| LabelMap {
            cluster_to_class: map,
            mu: vec![],
            total_votes: 0,
            low_confidence: vec![],
        };
        let p = Partition::new(vec![0, 0, 0]).unwrap();
        assert_eq!(assign_labels(&p, &lm(vec![7])).unwrap(), vec![7, 7, 7]);
        let p = Partition::new(vec![0, 1, 2, 1]).unwrap();
        assert_eq!(assign_labels(&p, &lm(vec![0, 1, 2])).unwrap(), vec![0, 1, 2, 1]);
        assert_eq!(assign_labels(&p, &lm(vec![2, 0, 1])).unwrap(), vec![2, 0, 1, 0]);
        assert!(matches!(assign_labels(&p, &lm(vec![0, 1])), Err(Error::UnmappedCluster(2))));
    }

    #[test]
    fn label_map_json_has_capital_m() {
        let g = fixture3();
        let lm = optimal_label_learning(&g, &g).unwrap();
        let s = serde_json::to_string(&lm).unwrap();
        assert!(s.contains("\"M\":15"));
        let f = tempfile::NamedTempFile::new().unwrap();
        lm.write_json(f.path()).unwrap();
        assert_eq!(LabelMap::read_json(f.path()).unwrap(), lm);
    }

    #[test]
    fn source_only_offset_flattens_vertex_tier() {
        // Shifting only the source past the target's range makes every
        // cost w_s + c - w_t, so all perfect matchings cost the same.
        let gt = fixture3();
        let vw: Vec<f64> = gt.vertex_weights().iter().map(|w| w + 10.0).collect();
        let ew = (0..3).map(|i| (0..3).map(|j| gt.edge_weight(i, j)).collect()).collect();
        let gs = DependencyGraph::new(vw, ew, Some(vec![0, 1, 2])).unwrap();
        let c = vertex_bipartite(&gt, &gs).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let totals: Vec<f64> = perms.iter().map(|p| (0..3).map(|i| c.get(i, p[i])).sum()).collect();
        assert!(totals.iter().all(|t| (t - totals[0]).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn permutation_equivariance(m in 2usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gs = random_distinct(m, &mut rng);
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let gt = gs.permuted(&perm).unwrap();
            let lm = optimal_label_learning(&gt, &gs).unwrap();
            prop_assert_eq!(&lm.cluster_to_class, &perm);
            prop_assert_eq!(lm.total_votes, lm.mu.iter().flatten().sum::<u64>());
        }

        #[test]
        fn vertex_shift_keeps_argmin(m in 2usize..7, seed in any::<u64>(), shift in 0.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gs = random_distinct(m, &mut rng);
            let gt = random_distinct(m, &mut rng);
            // |(a + s) - (b + s)| = |a - b|: a common offset leaves every
            // cost, and so every argmin, unchanged.
            let shifted = |g: &DependencyGraph| {
                let vw = g.vertex_weights().iter().map(|w| w + shift).collect();
                let ew = (0..g.m()).map(|i| (0..g.m()).map(|j| g.edge_weight(i, j)).collect()).collect();
                DependencyGraph::new(vw, ew, g.class_ids().map(<[usize]>::to_vec)).unwrap()
            };
            let c = vertex_bipartite(&gt, &gs).unwrap();
            let a = assignment_solve(&c).unwrap();
            let b = assignment_solve(&vertex_bipartite(&shifted(&gt), &shifted(&gs)).unwrap()).unwrap();
            // Rounding in the shifted sums may flip exact near-ties, so the
            // shifted argmin must be optimal under the original costs.
            let b_cost: f64 = b.pairs.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum();
            prop_assert!((b_cost - a.total_cost).abs() <= 1e-9 * (1.0 + shift));
        }
    }
}
