//! Browser demo bindings. Every export takes and returns a JSON string so
//! the page needs no generated TypeScript types.

use actilabel::cci::{cci, default_k0, nmi, purity};
use actilabel::ingest::{standardize, synth_generate, PcaModel, SynthSpec};
use actilabel::matching::{assignment_solve, CostMatrix};
use actilabel::netgraph::{default_k, knn_graph};
use actilabel::pipeline::{run_pipeline, RunConfig, SourceClustering};
use actilabel::Matrix;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct BlobParams {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub k: Option<usize>,
    pub k0: Option<usize>,
    pub seed: u64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            classes: 5,
            per_class: 100,
            dim: 8,
            separation: 6.0,
            k: None,
            k0: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BlobResult {
    /// 2-D projection of every observation, `[x, y]`.
    pub points: Vec<[f64; 2]>,
    pub truth: Vec<usize>,
    pub clusters: Vec<usize>,
    pub k: usize,
    pub edges: usize,
    pub nmi: f64,
    pub purity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct TransferParams {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise: f64,
    /// Rotate the target's channels by this many places.
    pub shift_channels: usize,
    pub cluster_source: bool,
    pub seed: u64,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self {
            classes: 5,
            per_class: 100,
            dim: 8,
            separation: 6.0,
            noise: 0.0,
            shift_channels: 1,
            cluster_source: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TransferResult {
    pub points: Vec<[f64; 2]>,
    pub truth: Vec<usize>,
    pub assigned: Vec<usize>,
    pub cluster_to_class: Vec<usize>,
    pub labeling_accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub upper_bound_f1: Option<f64>,
    pub nmi: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct AssignmentResult {
    /// `pairs[row] = column`.
    pub pairs: Vec<usize>,
    pub total_cost: f64,
}

fn parse<T: for<'de> Deserialize<'de> + Default>(json: &str) -> Result<T, String> {
    if json.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(json).map_err(|e| format!("bad parameters: {e}"))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn project(x: &Matrix) -> Result<Vec<[f64; 2]>, String> {
    let d = x.cols().min(2);
    let p = PcaModel::fit(x, d)
        .and_then(|m| m.transform(x))
        .map_err(|e| e.to_string())?;
    Ok((0..p.rows())
        .map(|i| {
            let r = p.row(i);
            [r[0], if d > 1 { r[1] } else { 0.0 }]
        })
        .collect())
}

/// Generates Gaussian blobs and finds their core clusters.
pub fn cluster_blobs_json(params: &str) -> Result<String, String> {
    let p: BlobParams = parse(params)?;
    let spec = SynthSpec {
        classes: p.classes,
        per_class: p.per_class,
        dim: p.dim,
        separation: p.separation,
        seed: p.seed,
        ..SynthSpec::default()
    };
    let (source, _) = synth_generate(&spec).map_err(|e| e.to_string())?;
    let x = standardize(&source.features);
    let k = p.k.unwrap_or_else(|| default_k(x.rows(), 0.02));
    let g = knn_graph(&x, k).map_err(|e| e.to_string())?;
    let k0 = p.k0.unwrap_or_else(|| default_k0(p.classes)).max(p.classes);
    let part = cci(&g, &x, p.classes, k0).map_err(|e| e.to_string())?;
    let truth = source.labels.unwrap_or_default();
    to_json(&BlobResult {
        points: project(&x)?,
        nmi: nmi(&truth, part.cluster_of()).map_err(|e| e.to_string())?,
        purity: purity(&truth, part.cluster_of()).map_err(|e| e.to_string())?,
        truth,
        clusters: part.cluster_of().to_vec(),
        k,
        edges: g.edge_count(),
    })
}

/// Runs the whole pipeline on a synthetic source/target pair.
pub fn synthetic_transfer_json(params: &str) -> Result<String, String> {
    let p: TransferParams = parse(params)?;
    let mut perm: Vec<usize> = (0..p.dim).collect();
    perm.rotate_left(p.shift_channels % p.dim.max(1));
    let spec = SynthSpec {
        classes: p.classes,
        per_class: p.per_class,
        dim: p.dim,
        separation: p.separation,
        noise: p.noise,
        permutation: Some(perm),
        seed: p.seed,
        ..SynthSpec::default()
    };
    let mut cfg = RunConfig::synthetic(spec.clone());
    if p.cluster_source {
        cfg.source_clustering = SourceClustering::Cci;
    }
    let o = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let (_, target) = synth_generate(&spec).map_err(|e| e.to_string())?;
    let n = o.assigned_labels.len();
    let truth = target.labels.map(|l| l[..n].to_vec()).unwrap_or_default();
    let r = o.report;
    to_json(&TransferResult {
        points: project(&o.target_features)?,
        truth,
        assigned: o.assigned_labels,
        cluster_to_class: r.cluster_to_class,
        labeling_accuracy: r.labeling_accuracy,
        macro_f1: r.macro_f1,
        upper_bound_f1: r.upper_bound_f1,
        nmi: r.nmi,
        warnings: r.warnings,
    })
}

/// Minimum-cost assignment of a square matrix given as `[[..], ..]`.
pub fn solve_assignment_json(matrix: &str) -> Result<String, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(matrix).map_err(|e| format!("bad matrix: {e}"))?;
    let c = CostMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
    let a = assignment_solve(&c).map_err(|e| e.to_string())?;
    to_json(&AssignmentResult {
        pairs: a.pairs,
        total_cost: a.total_cost,
    })
}

#[wasm_bindgen]
pub fn cluster_blobs(params: &str) -> Result<String, JsValue> {
    cluster_blobs_json(params).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn synthetic_transfer(params: &str) -> Result<String, JsValue> {
    synthetic_transfer_json(params).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve_assignment(matrix: &str) -> Result<String, JsValue> {
    solve_assignment_json(matrix).map_err(|e| JsValue::from_str(&e))
}
