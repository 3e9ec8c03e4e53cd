//! Core cluster identification: greedy modularity agglomeration followed
//! by cut-similarity merging, plus clustering quality metrics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::netgraph::{cosine_similarity, NetworkGraph};

/// Assignment of every vertex to one of `K` non-empty clusters `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates an already-compact assignment.
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        let k = cluster_of.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &c in &cluster_of {
            seen[c] = true;
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("cluster {id} is empty")));
        }
        Ok(Self { cluster_of, k })
    }

    /// Re-indexes arbitrary ids to `0..K` in ascending id order. Returns the
    /// partition and the original id of each cluster.
    pub fn compact(raw: &[usize]) -> (Self, Vec<usize>) {
        let mut ids = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let cluster_of = raw
            .iter()
            .map(|r| ids.binary_search(r).expect("id present"))
            .collect();
        (
            Self {
                cluster_of,
                k: ids.len(),
            },
            ids,
        )
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            cluster_of: (0..n).collect(),
            k: n,
        }
    }

    pub fn len(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_of.is_empty()
    }

    /// Cluster count `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn cluster(&self, v: usize) -> usize {
        self.cluster_of[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.cluster_of {
            s[c] += 1;
        }
        s
    }

    pub(crate) fn check_id(&self, id: usize) -> Result<()> {
        if id < self.k {
            Ok(())
        } else {
            Err(Error::InvalidCluster { id, count: self.k })
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["vertex", "cluster"]).map_err(csv_err)?;
        for (v, c) in self.cluster_of.iter().enumerate() {
            w.write_record([v.to_string(), c.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a `vertex,cluster` CSV; vertices must be `0..n` in any order.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rows = Vec::new();
        for rec in r.deserialize::<(usize, usize)>() {
            rows.push(rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?);
        }
        rows.sort_unstable();
        if rows.iter().enumerate().any(|(i, &(v, _))| i != v) {
            return Err(Error::InvalidInput(format!(
                "{}: vertices must be exactly 0..n",
                path.display()
            )));
        }
        Partition::new(rows.into_iter().map(|(_, c)| c).collect())
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    gain: i128,
    pair: (usize, usize),
    versions: (u32, u32),
}

impl Ord for Candidate {
    // Max-heap on gain; among equal gains the smallest pair wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .cmp(&other.gain)
            .then_with(|| other.pair.cmp(&self.pair))
            .then_with(|| self.versions.cmp(&other.versions))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Agglomerative greedy modularity maximisation.
///
/// Starts from singletons and merges the pair with the largest modularity
/// gain until `k0` communities remain or no merge has positive gain.
/// Gains are compared exactly: for `E` edges the gain of joining `a` and
/// `b` is `(2E cut(a,b) - deg(a) deg(b)) / 2E^2`, so only the integer
/// numerator is tracked. A merged community keeps the smaller id.
pub fn greedy_communities(g: &NetworkGraph, k0: usize) -> Result<Partition> {
    let n = g.n();
    if k0 == 0 || k0 > n {
        return Err(Error::InvalidInput(format!(
            "target community count {k0} must be in 1..={n}"
        )));
    }
    let two_e = 2 * g.edge_count() as i128;
    let mut degree: Vec<i128> = (0..n).map(|v| g.degree(v) as i128).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = (0..n)
        .map(|v| g.neighbors(v).iter().map(|&u| (u, 1)).collect())
        .collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut version = vec![0u32; n];
    let mut alive = vec![true; n];

    let gain = |cut: i128, da: i128, db: i128| two_e * cut - da * db;
    let mut heap = BinaryHeap::new();
    for &(u, v) in g.edges() {
        let gn = gain(1, degree[u], degree[v]);
        if gn > 0 {
            heap.push(Candidate {
                gain: gn,
                pair: (u, v),
                versions: (0, 0),
            });
        }
    }

    let mut count = n;
    while count > k0 {
        let Some(c) = heap.pop() else { break };
        let (a, b) = c.pair;
        if !alive[a] || !alive[b] || version[a] != c.versions.0 || version[b] != c.versions.1 {
            continue;
        }
        // a < b always; b is absorbed into a.
        let absorbed = std::mem::take(&mut links[b]);
        links[a].remove(&b);
        for (x, cut) in absorbed {
            if x == a {
                continue;
            }
            *links[a].entry(x).or_insert(0) += cut;
            let lx = &mut links[x];
            lx.remove(&b);
            *lx.entry(a).or_insert(0) += cut;
        }
        degree[a] += degree[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        alive[b] = false;
        version[a] += 1;
        count -= 1;

        for (&x, &cut) in &links[a] {
            let gn = gain(cut, degree[a], degree[x]);
            if gn > 0 {
                let (pair, versions) = if a < x {
                    ((a, x), (version[a], version[x]))
                } else {
                    ((x, a), (version[x], version[a]))
                };
                heap.push(Candidate {
                    gain: gn,
                    pair,
                    versions,
                });
            }
        }
    }

    let mut raw = vec![0; n];
    for (rep, m) in members.iter().enumerate() {
        for &v in m {
            raw[v] = rep;
        }
    }
    Ok(Partition::compact(&raw).0)
}

/// Intra-cluster edge counts and the symmetric inter-cluster cut matrix.
pub(crate) fn edge_counts(g: &NetworkGraph, p: &Partition) -> (Vec<u64>, Vec<Vec<u64>>) {
    let k = p.k();
    let mut density = vec![0u64; k];
    let mut cut = vec![vec![0u64; k]; k];
    for &(u, v) in g.edges() {
        let (a, b) = (p.cluster(u), p.cluster(v));
        if a == b {
            density[a] += 1;
        } else {
            cut[a][b] += 1;
            cut[b][a] += 1;
        }
    }
    (density, cut)
}

/// Similarity `2 cut / (density_i + density_j)` kept as an exact ratio.
#[derive(Debug, Clone, Copy)]
struct Alpha {
    num: u64,
    den: u64,
}

impl Alpha {
    fn new(cut: u64, di: u64, dj: u64) -> Self {
        Self {
            num: 2 * cut,
            den: di + dj,
        }
    }

    fn value(self) -> f64 {
        match (self.num, self.den) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (n, d) => n as f64 / d as f64,
        }
    }

    fn cmp(self, other: Self) -> Ordering {
        let inf = |a: Alpha| a.den == 0 && a.num > 0;
        match (inf(self), inf(other)) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => {
                // 0/0 is treated as 0 and compares like any zero ratio.
                let l = self.num as u128 * other.den.max(1) as u128;
                let r = other.num as u128 * self.den.max(1) as u128;
                if self.num == 0 || other.num == 0 {
                    self.num.cmp(&other.num)
                } else {
                    l.cmp(&r)
                }
            }
        }
    }
}

/// `alpha(i, j) = Cut(C_i, C_j) / ((|C_i| + |C_j|) / 2)` where `|C|` counts
/// intra-cluster edges. Both clusters edgeless gives infinity when they
/// share an edge and 0 otherwise.
pub fn similarity_score(g: &NetworkGraph, p: &Partition, i: usize, j: usize) -> Result<f64> {
    p.check_id(i)?;
    p.check_id(j)?;
    if i == j {
        return Err(Error::InvalidInput("similarity needs two distinct clusters".into()));
    }
    check_cover(g, p)?;
    let (density, cut) = edge_counts(g, p);
    Ok(Alpha::new(cut[i][j], density[i], density[j]).value())
}

fn check_cover(g: &NetworkGraph, p: &Partition) -> Result<()> {
    if p.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: g.n(),
        });
    }
    Ok(())
}

/// Repeatedly merges the most similar pair of clusters until `m` remain.
/// Ties go to the smallest `(i, j)`; ids are re-indexed compactly.
pub fn merge_to_k(g: &NetworkGraph, p: &Partition, m: usize) -> Result<Partition> {
    if m < 1 {
        return Err(Error::InvalidInput("target cluster count must be at least 1".into()));
    }
    if m > p.k() {
        return Err(Error::InvalidInput(format!(
            "cannot merge {} clusters up to {m}",
            p.k()
        )));
    }
    check_cover(g, p)?;
    let k = p.k();
    let (mut density, mut cut) = edge_counts(g, p);
    let mut alive = vec![true; k];
    let mut parent: Vec<usize> = (0..k).collect();
    let mut remaining = k;
    while remaining > m {
        let mut best: Option<(Alpha, usize, usize)> = None;
        for i in (0..k).filter(|&i| alive[i]) {
            for j in (i + 1..k).filter(|&j| alive[j]) {
                let a = Alpha::new(cut[i][j], density[i], density[j]);
                if best.is_none_or(|(b, _, _)| a.cmp(b) == Ordering::Greater) {
                    best = Some((a, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two clusters remain");
        density[i] += density[j] + cut[i][j];
        for x in 0..k {
            if x != i && x != j {
                cut[i][x] += cut[j][x];
                cut[x][i] = cut[i][x];
            }
            cut[j][x] = 0;
            cut[x][j] = 0;
        }
        cut[i][i] = 0;
        alive[j] = false;
        parent[j] = i;
        remaining -= 1;
    }
    let root = |mut c: usize| {
        while parent[c] != c {
            c = parent[c];
        }
        c
    };
    let raw: Vec<usize> = p.cluster_of().iter().map(|&c| root(c)).collect();
    Ok(Partition::compact(&raw).0)
}

/// Default greedy stopping count: four communities per target cluster.
pub fn default_k0(m: usize) -> usize {
    4 * m
}

/// Core cluster identification.
///
/// Runs [`greedy_communities`] and [`merge_to_k`] on the non-isolated
/// vertices, then gives every isolated vertex the cluster of its most
/// cosine-similar non-isolated vertex. An edgeless graph is clustered as a
/// whole. Fewer than `m` clusters are returned when the graph has fewer
/// communities than that.
/// Re-indexes clusters by ascending size (ties: smallest member), so that
/// zero-similarity ties in the merge step absorb the smallest fragments
/// before any two large clusters.
fn by_size(p: &Partition) -> Partition {
    let sizes = p.sizes();
    let mut first = vec![usize::MAX; p.k()];
    for (v, &c) in p.cluster_of().iter().enumerate().rev() {
        first[c] = v;
    }
    let mut order: Vec<usize> = (0..p.k()).collect();
    order.sort_by_key(|&c| (sizes[c], first[c]));
    let mut rank = vec![0; p.k()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    Partition::new(p.cluster_of().iter().map(|&c| rank[c]).collect()).expect("bijective relabel")
}

pub fn cci(g: &NetworkGraph, features: &Matrix, m: usize, k0: usize) -> Result<Partition> {
    if features.rows() != g.n() {
        return Err(Error::LengthMismatch {
            left: features.rows(),
            right: g.n(),
        });
    }
    if m < 1 || m > k0 {
        return Err(Error::InvalidInput(format!(
            "cluster count m = {m} must be in 1..=K0 ({k0})"
        )));
    }
    let n = g.n();
    let mut core: Vec<usize> = (0..n).filter(|&v| !g.is_isolated(v)).collect();
    if core.is_empty() {
        core = (0..n).collect();
    }
    let sub = induced(g, &core)?;
    let communities = greedy_communities(&sub, k0.min(core.len()))?;

    // Greedy merging completes large communities first and stops with
    // small leftovers whose tiny densities make their cut scores lose to
    // any pair of large clusters. Leftovers smaller than the neighbourhood
    // size (keeping at least the m largest) are set aside and attached
    // afterwards like isolated vertices.
    let sizes = communities.sizes();
    let mut ranked: Vec<usize> = (0..communities.k()).collect();
    ranked.sort_by_key(|&c| (std::cmp::Reverse(sizes[c]), c));
    let keep_count = sizes.iter().filter(|&&s| s >= g.k()).count().max(m).min(ranked.len());
    let mut kept = vec![false; communities.k()];
    for &c in &ranked[..keep_count] {
        kept[c] = true;
    }
    let (core, communities, sub) = if keep_count < communities.k() {
        let keep: Vec<usize> = (0..core.len())
            .filter(|&i| kept[communities.cluster(i)])
            .collect();
        let raw: Vec<usize> = keep.iter().map(|&i| communities.cluster(i)).collect();
        let sub = induced(&sub, &keep)?;
        let core: Vec<usize> = keep.iter().map(|&i| core[i]).collect();
        (core, Partition::compact(&raw).0, sub)
    } else {
        (core, communities, sub)
    };

    let target = m.min(communities.k());
    if target < m {
        log::warn!(
            "only {} communities found, fewer than the requested {m}",
            communities.k()
        );
    }
    let merged = merge_to_k(&sub, &by_size(&communities), target)?;

    let mut assignment = vec![usize::MAX; n];
    for (i, &v) in core.iter().enumerate() {
        assignment[v] = merged.cluster(i);
    }
    let rest: Vec<usize> = (0..n).filter(|&v| assignment[v] == usize::MAX).collect();
    for v in rest {
        let x = features.row(v);
        let mut best = (f64::NEG_INFINITY, core[0]);
        for &c in &core {
            let s = cosine_similarity(x, features.row(c))?;
            if s > best.0 {
                best = (s, c);
            }
        }
        assignment[v] = assignment[best.1];
    }
    Partition::new(assignment)
}

/// Subgraph on `vertices` (renumbered `0..len` in the given order).
fn induced(g: &NetworkGraph, vertices: &[usize]) -> Result<NetworkGraph> {
    let mut local = vec![usize::MAX; g.n()];
    for (i, &v) in vertices.iter().enumerate() {
        local[v] = i;
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
        .map(|&(u, v)| (local[u], local[v]))
        .collect();
    NetworkGraph::from_edges(vertices.len(), g.k(), &edges)
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

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `I / sqrt(H(truth) H(pred))`.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    if truth.is_empty() {
        return Err(Error::InvalidInput("nmi of empty labelings".into()));
    }
    let n = truth.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ct: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cp: BTreeMap<usize, usize> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *joint.entry((t, p)).or_default() += 1;
        *ct.entry(t).or_default() += 1;
        *cp.entry(p).or_default() += 1;
    }
    let ht = entropy(ct.values().copied(), n);
    let hp = entropy(cp.values().copied(), n);
    match (ht == 0.0, hp == 0.0) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let mut entries: Vec<_> = joint.into_iter().collect();
    entries.sort_unstable();
    let mi: f64 = entries
        .into_iter()
        .map(|((t, p), c)| {
            let c = c as f64;
            (c / n) * (c * n / (ct[&t] as f64 * cp[&p] as f64)).ln()
        })
        .sum();
    Ok((mi / (ht * hp).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of observations that belong to their cluster's majority class.
pub fn purity(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    if truth.is_empty() {
        return Err(Error::InvalidInput("purity of empty labelings".into()));
    }
    let mut joint: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *joint.entry(p).or_default().entry(t).or_default() += 1;
    }
    if joint.len() == truth.len() && truth.len() > 1 {
        log::warn!("purity of an all-singleton clustering is trivially 1");
    }
    let hits: usize = joint
        .values()
        .map(|classes| classes.values().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / truth.len() as f64)
}
