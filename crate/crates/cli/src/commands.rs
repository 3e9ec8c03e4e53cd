use std::fmt;
use std::path::{Path, PathBuf};

use actilabel::cci::{cci, default_k0, nmi, purity, Partition};
use actilabel::classify::{labeling_accuracy, macro_f1};
use actilabel::depgraph::{build_dependency_graph, from_labels, DependencyGraph};
use actilabel::ingest::{
    load_csv, segment, synth_generate, windows_to_dataset, CsvSchema, DomainDataset, PcaModel,
    Standardizer, SynthSpec,
};
use actilabel::matching::{assign_labels, optimal_label_learning};
use actilabel::netgraph::{default_k, knn_graph, NetworkGraph};
use actilabel::pipeline::{
    emit_plot_data, read_labels_csv, report_to_json, run_grid, run_pipeline, write_labels_csv,
    write_plot_csv, RunConfig, ScenarioGrid,
};
use actilabel::Matrix;
use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;

use crate::GraphOpts;

/// Why a command stopped, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Stage(anyhow::Error),
    Partial { failed: usize, total: usize },
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Stage(_) => 2,
            Failure::Partial { .. } => 3,
        }
    }
}

/// The error chain, skipping causes whose text an outer message already
/// contains.
fn chain(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration: {}", chain(e)),
            Failure::Stage(e) => f.write_str(&chain(e)),
            Failure::Partial { failed, total } => write!(f, "{failed} of {total} runs failed"),
        }
    }
}

fn config(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn stage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Stage(e.into())
}

pub const THREADS_VAR: &str = "ACTILABEL_THREADS";

/// Grid parallelism from the environment; unset or 0 means all cores.
fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| config(anyhow!("{THREADS_VAR} must be a non-negative integer, got {v:?}"))),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(config)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(stage)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(stage)
}

fn read_dataset(path: &Path) -> Result<DomainDataset, Failure> {
    DomainDataset::read_csv(path)
        .with_context(|| format!("reading features {}", path.display()))
        .map_err(stage)
}

/// Scaled and reduced features plus the network graph over them.
fn prepared_graph(ds: &DomainDataset, opts: &GraphOpts) -> Result<(Matrix, NetworkGraph), Failure> {
    if opts.reduce_dim == Some(0) || opts.k == Some(0) {
        return Err(config(anyhow!("k and reduce-dim must be positive")));
    }
    let mut x = ds.features.clone();
    if !opts.no_standardize {
        x = Standardizer::fit(&x).transform(&x).map_err(stage)?;
    }
    if let Some(d) = opts.reduce_dim {
        x = PcaModel::fit(&x, d.min(x.cols()))
            .and_then(|p| p.transform(&x))
            .context("reducing dimension")
            .map_err(stage)?;
    }
    let k = opts.k.unwrap_or_else(|| default_k(x.rows(), opts.k_fraction));
    let g = knn_graph(&x, k).context("building network graph").map_err(stage)?;
    Ok((x, g))
}

pub fn synth(spec: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let mut spec: SynthSpec = read_json(spec)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (source, target) = synth_generate(&spec).map_err(config)?;
    create_dir(out)?;
    for (name, ds) in [("source.csv", &source), ("target.csv", &target)] {
        ds.write_csv(out.join(name)).map_err(stage)?;
    }
    println!("wrote {} source and {} target rows to {}", source.len(), target.len(), out.display());
    Ok(())
}

pub fn features(input: &Path, schema: &Path, window: f64, overlap: f64, out: &Path) -> Result<(), Failure> {
    let schema: CsvSchema = read_json(schema)?;
    if !(window > 0.0) || !(0.0..1.0).contains(&overlap) {
        return Err(config(anyhow!("window must be positive and overlap in [0, 1)")));
    }
    let rec = load_csv(input, &schema)
        .with_context(|| format!("loading {}", input.display()))
        .map_err(stage)?;
    let ds = segment(&rec, window, overlap)
        .and_then(|w| windows_to_dataset(&w))
        .context("featurising")
        .map_err(stage)?;
    ds.write_csv(out).map_err(stage)?;
    println!("wrote {} windows x {} features to {}", ds.len(), ds.dim(), out.display());
    Ok(())
}

pub fn graph(features: &Path, opts: &GraphOpts, out: &Path) -> Result<(), Failure> {
    let ds = read_dataset(features)?;
    let (_, g) = prepared_graph(&ds, opts)?;
    g.write_edges_csv(out).map_err(stage)?;
    println!("n = {}, k = {}, {} mutual edges", g.n(), g.k(), g.edge_count());
    Ok(())
}

pub fn cluster(features: &Path, m: usize, k0: Option<usize>, opts: &GraphOpts, out: &Path) -> Result<(), Failure> {
    let k0 = k0.unwrap_or_else(|| default_k0(m));
    if m == 0 || k0 < m {
        return Err(config(anyhow!("need 1 <= m <= k0, got m = {m}, k0 = {k0}")));
    }
    let ds = read_dataset(features)?;
    let (x, g) = prepared_graph(&ds, opts)?;
    let p = cci(&g, &x, m, k0).context("core cluster identification").map_err(stage)?;
    p.write_csv(out).map_err(stage)?;
    println!("{} clusters of sizes {:?}", p.k(), p.sizes());
    Ok(())
}

pub fn depgraph(features: &Path, partition: Option<&Path>, opts: &GraphOpts, out: &Path) -> Result<(), Failure> {
    let ds = read_dataset(features)?;
    let (_, g) = prepared_graph(&ds, opts)?;
    let dg = match partition {
        Some(path) => {
            let p = Partition::read_csv(path).map_err(stage)?;
            build_dependency_graph(&g, &p)
        }
        None => {
            let labels = ds
                .labels
                .as_ref()
                .ok_or_else(|| config(anyhow!("{} has no label column", features.display())))?;
            from_labels(&g, labels)
        }
    }
    .context("building dependency graph")
    .map_err(stage)?;
    dg.write_json(out).map_err(stage)?;
    println!("dependency graph over {} clusters", dg.m());
    Ok(())
}

pub fn transfer(target: &Path, source: &Path, partition: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let gt = DependencyGraph::read_json(target).map_err(stage)?;
    let gs = DependencyGraph::read_json(source).map_err(stage)?;
    let lm = optimal_label_learning(&gt, &gs).context("label learning").map_err(stage)?;
    create_dir(out)?;
    lm.write_json(out.join("label_map.json")).map_err(stage)?;
    if let Some(path) = partition {
        let p = Partition::read_csv(path).map_err(stage)?;
        let labels = assign_labels(&p, &lm).map_err(stage)?;
        write_labels_csv(&labels, &out.join("assigned_labels.csv")).map_err(stage)?;
    }
    println!("cluster -> class {:?}", lm.cluster_to_class);
    Ok(())
}

/// Labels from a `vertex,label` CSV or the label column of a feature CSV.
fn read_any_labels(path: &Path) -> Result<Vec<usize>, Failure> {
    let head = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(stage)?;
    if head.trim_start().starts_with("vertex") {
        return read_labels_csv(path).map_err(stage);
    }
    read_dataset(path)?
        .labels
        .ok_or_else(|| config(anyhow!("{} has no label column", path.display())))
}

pub fn evaluate(pred: &Path, truth: &Path, partition: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let pred = read_any_labels(pred)?;
    let truth = read_any_labels(truth)?;
    let m = pred.iter().chain(&truth).max().map_or(1, |c| c + 1);
    let mut scores = serde_json::Map::new();
    scores.insert("labeling_accuracy".into(), labeling_accuracy(&pred, &truth).map_err(stage)?.into());
    scores.insert("macro_f1".into(), macro_f1(&pred, &truth, m).map_err(stage)?.into());
    if let Some(path) = partition {
        let p = Partition::read_csv(path).map_err(stage)?;
        scores.insert("nmi".into(), nmi(&truth, p.cluster_of()).map_err(stage)?.into());
        scores.insert("purity".into(), purity(&truth, p.cluster_of()).map_err(stage)?.into());
    }
    let json = serde_json::to_string_pretty(&scores).map_err(stage)?;
    match out {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

/// Command-line flags override the config file, which overrides defaults.
pub fn run(
    config_path: &Path,
    k: Option<usize>,
    m: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = RunConfig::read(config_path).map_err(config)?;
    if k.is_some() {
        cfg.k = k;
    }
    if m.is_some() {
        cfg.m = m;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if out.is_some() {
        cfg.out = out;
    }
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| config(anyhow!("no output directory: pass --out or set \"out\"")))?;
    let outcome = run_pipeline(&cfg).map_err(|e| {
        if e.is_config() {
            config(e)
        } else {
            stage(e)
        }
    })?;
    outcome.write_artifacts(&dir).map_err(stage)?;
    let r = &outcome.report;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "labeling accuracy {}, macro-F1 {} (upper bound {}), NMI {}",
        show(r.labeling_accuracy),
        show(r.macro_f1),
        show(r.upper_bound_f1),
        show(r.nmi)
    );
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

pub fn grid(path: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let mut grid = ScenarioGrid::read(path).map_err(config)?;
    if let Some(s) = seed {
        grid.base.seed = s;
    }
    grid.pairs().map_err(config)?;
    let threads = threads()?;
    create_dir(out)?;
    let outcome = run_grid(&grid, threads, Some(out)).map_err(stage)?;
    outcome.write_summary_csv(&out.join("summary.csv")).map_err(stage)?;
    let total = outcome.cells.len();
    let failed = outcome.failures();
    println!("{} of {total} pairs succeeded", total - failed);
    if failed > 0 {
        return Err(Failure::Partial { failed, total });
    }
    Ok(())
}

pub fn sweep_k(config_path: &Path, ks: &[usize], dataset: &str, scenario: &str, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::read(config_path).map_err(config)?;
    cfg.validate().map_err(config)?;
    if ks.contains(&0) {
        return Err(config(anyhow!("k values must be positive")));
    }
    create_dir(out)?;
    let results = actilabel::pipeline::sweep_k(&cfg, ks);
    let mut ok = Vec::new();
    for (k, r) in &results {
        match r {
            Ok(report) => {
                write_text(&out.join(format!("report_k{k}.json")), &report_to_json(report).map_err(stage)?)?;
                ok.push((k.to_string(), report));
            }
            Err(e) => eprintln!("k = {k}: {e}"),
        }
    }
    let rows = emit_plot_data(ok.iter().map(|(k, r)| (k.clone(), *r)), dataset, scenario);
    write_plot_csv(&rows, &out.join("plot_data.csv")).map_err(stage)?;
    let failed = results.len() - ok.len();
    println!("{} of {} k values succeeded", ok.len(), results.len());
    match failed {
        0 => Ok(()),
        f if f == results.len() => Err(stage(anyhow!("every k value failed"))),
        f => Err(Failure::Partial {
            failed: f,
            total: results.len(),
        }),
    }
}
