//! End-to-end orchestration: configuration, the transfer pipeline,
//! experiment grids and plot data.

mod grid;
mod plot;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cci::{cci, default_k0, nmi, purity, Partition};
use crate::classify::{
    confusion_matrix, knn_train, labeling_accuracy, per_class_f1, EvaluationReport, Predictor,
    RunMetadata, DEFAULT_K_C,
};
use crate::depgraph::{build_dependency_graph, from_labels, DependencyGraph};
use crate::error::Error;
use crate::ingest::{
    load_csv, segment, split, synth_generate, windows_to_dataset, CsvSchema, DomainDataset,
    PcaModel, Standardizer, SynthSpec, DEFAULT_SPLIT,
};
use crate::matching::{assign_labels, optimal_label_learning, LabelMap};
use crate::matrix::Matrix;
use crate::netgraph::{default_k, knn_graph, NetworkGraph};

pub use grid::{run_grid, GridCell, GridOutcome, GridSummaryRow, Scenario, ScenarioGrid, ScenarioGroup, DomainDecl};
pub use plot::{emit_plot_data, read_plot_csv, write_plot_csv, PlotRow};

/// Which half of a synthetic pair a dataset source refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

/// Where a domain's observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Raw sensor CSV, windowed and featurised.
    Csv { path: PathBuf, schema: CsvSchema },
    /// Pre-computed feature matrix (`f0..f{d-1}[,label]`).
    Features { path: PathBuf },
    /// One side of a synthetic Gaussian-blob pair.
    Synth { spec: SynthSpec, side: Side },
}

impl DatasetSource {
    fn is_labeled_by_construction(&self) -> Option<bool> {
        match self {
            DatasetSource::Csv { schema, .. } => Some(schema.label_column.is_some()),
            DatasetSource::Synth { .. } => Some(true),
            DatasetSource::Features { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceClustering {
    /// Ground-truth class partition.
    Labels,
    /// Core cluster identification, like the target.
    Cci,
}

impl fmt::Display for SourceClustering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceClustering::Labels => "labels",
            SourceClustering::Cci => "cci",
        })
    }
}

fn default_window() -> f64 {
    2.0
}
fn default_overlap() -> f64 {
    0.25
}
fn default_true() -> bool {
    true
}
fn default_reduce() -> Option<usize> {
    Some(10)
}
fn default_k_fraction() -> f64 {
    0.02
}
fn default_k_c() -> usize {
    DEFAULT_K_C
}
fn default_split() -> [f64; 3] {
    DEFAULT_SPLIT
}
fn default_source_clustering() -> SourceClustering {
    SourceClustering::Labels
}

/// Full pipeline configuration, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: DatasetSource,
    pub target: DatasetSource,
    #[serde(default = "default_window")]
    pub window_seconds: f64,
    #[serde(default = "default_overlap")]
    pub overlap_fraction: f64,
    /// Z-score each column (statistics from the training part).
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Principal components kept; `null` skips the reduction.
    #[serde(default = "default_reduce")]
    pub reduce_dim: Option<usize>,
    /// Fixed k for both network graphs; otherwise `default_k(n, k_fraction)`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_k_fraction")]
    pub k_fraction: f64,
    /// Greedy community count; defaults to `4 m`.
    #[serde(default)]
    pub k0: Option<usize>,
    /// Target cluster count; defaults to the number of source classes.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_k_c")]
    pub k_c: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_source_clustering")]
    pub source_clustering: SourceClustering,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(source: DatasetSource, target: DatasetSource) -> Self {
        Self {
            source,
            target,
            window_seconds: default_window(),
            overlap_fraction: default_overlap(),
            standardize: true,
            reduce_dim: default_reduce(),
            k: None,
            k_fraction: default_k_fraction(),
            k0: None,
            m: None,
            k_c: DEFAULT_K_C,
            seed: 0,
            source_clustering: SourceClustering::Labels,
            split: DEFAULT_SPLIT,
            out: None,
        }
    }

    /// Source and target sides of one synthetic spec.
    pub fn synthetic(spec: SynthSpec) -> Self {
        Self::new(
            DatasetSource::Synth {
                spec: spec.clone(),
                side: Side::Source,
            },
            DatasetSource::Synth {
                spec,
                side: Side::Target,
            },
        )
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(s).map_err(|e| PipelineError::new(Stage::Config, Error::Json(e)))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| {
            PipelineError::new(
                Stage::Config,
                Error::Io {
                    path: path.to_path_buf(),
                    source,
                },
            )
        })?;
        Self::from_json(&s)
    }

    /// Range checks that need no data.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::new(Stage::Config, Error::InvalidInput(msg)));
        if !(self.window_seconds > 0.0) {
            return bad(format!("window_seconds must be positive, got {}", self.window_seconds));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return bad(format!("overlap_fraction must be in [0, 1), got {}", self.overlap_fraction));
        }
        if self.reduce_dim == Some(0) {
            return bad("reduce_dim must be positive".into());
        }
        if self.k == Some(0) {
            return bad("k must be positive".into());
        }
        if !(self.k_fraction > 0.0 && self.k_fraction < 1.0) {
            return bad(format!("k_fraction must be in (0, 1), got {}", self.k_fraction));
        }
        if self.m == Some(0) {
            return bad("m must be at least 1".into());
        }
        if let (Some(k0), Some(m)) = (self.k0, self.m) {
            if k0 < m {
                return bad(format!("k0 ({k0}) must be at least m ({m})"));
            }
        }
        if self.k_c == 0 {
            return bad("k_c must be positive".into());
        }
        if self.split.iter().any(|r| !(*r >= 0.0))
            || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9
            || self.split[0] == 0.0
        {
            return bad(format!("split {:?} must be non-negative, sum to 1 and train on something", self.split));
        }
        if self.source.is_labeled_by_construction() == Some(false) {
            return Err(PipelineError::new(
                Stage::Config,
                Error::MissingLabels("source CSV schema has no label column".into()),
            ));
        }
        Ok(())
    }
}

/// Pipeline step an error surfaced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Ingest,
    Preprocess,
    Graph,
    Cluster,
    DependencyGraph,
    Matching,
    Classify,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Preprocess => "preprocess",
            Stage::Graph => "graph",
            Stage::Cluster => "cluster",
            Stage::DependencyGraph => "depgraph",
            Stage::Matching => "matching",
            Stage::Classify => "classify",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage{}: {source}", if context.is_empty() { String::new() } else { format!(" ({context})") })]
pub struct PipelineError {
    pub stage: Stage,
    pub context: String,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn new(stage: Stage, source: Error) -> Self {
        Self {
            stage,
            context: String::new(),
            source,
        }
    }

    fn with(stage: Stage, context: &str) -> impl FnOnce(Error) -> Self + '_ {
        move |source| Self {
            stage,
            context: context.to_string(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        self.stage == Stage::Config
    }
}

/// Loads one side, featurising raw recordings as configured.
pub fn load_dataset(src: &DatasetSource, cfg: &RunConfig) -> Result<DomainDataset, Error> {
    match src {
        DatasetSource::Csv { path, schema } => {
            let rec = load_csv(path, schema)?;
            let windows = segment(&rec, cfg.window_seconds, cfg.overlap_fraction)?;
            windows_to_dataset(&windows)
        }
        DatasetSource::Features { path } => DomainDataset::read_csv(path),
        DatasetSource::Synth { spec, side } => {
            let spec = SynthSpec {
                seed: spec.seed.wrapping_add(cfg.seed),
                ..spec.clone()
            };
            let (s, t) = synth_generate(&spec)?;
            Ok(match side {
                Side::Source => s,
                Side::Target => t,
            })
        }
    }
}

/// Training and test features after scaling and reduction fitted on the
/// training part.
struct Prepared {
    train: DomainDataset,
    test: DomainDataset,
}

fn prepare(ds: &DomainDataset, cfg: &RunConfig) -> Result<Prepared, Error> {
    let (train, test, _validation) = split(ds, cfg.split)?;
    let (mut xtr, mut xte) = (train.features.clone(), test.features.clone());
    if cfg.standardize {
        let s = Standardizer::fit(&xtr);
        xtr = s.transform(&xtr)?;
        xte = s.transform(&xte)?;
    }
    if let Some(d) = cfg.reduce_dim {
        let model = PcaModel::fit(&xtr, d.min(xtr.cols()))?;
        xtr = model.transform(&xtr)?;
        xte = model.transform(&xte)?;
    }
    Ok(Prepared {
        train: train.with_features(xtr),
        test: test.with_features(xte),
    })
}

fn graph_k(cfg: &RunConfig, n: usize) -> Result<usize, Error> {
    let k = cfg.k.unwrap_or_else(|| default_k(n, cfg.k_fraction));
    if k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(k)
}

fn distinct(labels: &[usize]) -> usize {
    let mut l = labels.to_vec();
    l.sort_unstable();
    l.dedup();
    l.len()
}

/// Majority source class of every cluster.
fn cluster_classes(p: &Partition, labels: &[usize]) -> Vec<usize> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); p.k()];
    for (v, &c) in p.cluster_of().iter().enumerate() {
        members[c].push(labels[v]);
    }
    members
        .iter()
        .map(|m| crate::ingest::majority_label(m).expect("clusters are non-empty"))
        .collect()
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvaluationReport,
    pub label_map: LabelMap,
    pub target_network: NetworkGraph,
    pub source_network: NetworkGraph,
    pub target_partition: Partition,
    pub source_partition: Partition,
    pub target_graph: DependencyGraph,
    pub source_graph: DependencyGraph,
    /// Transferred labels of the target training observations.
    pub assigned_labels: Vec<usize>,
    /// Reduced target training features, for plotting.
    pub target_features: Matrix,
}

/// Runs ingest, graph modeling, label learning and classification.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let source = load_dataset(&cfg.source, cfg).map_err(PipelineError::with(Stage::Ingest, "source"))?;
    let target = load_dataset(&cfg.target, cfg).map_err(PipelineError::with(Stage::Ingest, "target"))?;
    if source.labels.is_none() {
        return Err(PipelineError::new(
            Stage::Config,
            Error::MissingLabels("source dataset is unlabeled".into()),
        ));
    }
    let mut warnings = Vec::new();

    let src = prepare(&source, cfg).map_err(PipelineError::with(Stage::Preprocess, "source"))?;
    let tgt = prepare(&target, cfg).map_err(PipelineError::with(Stage::Preprocess, "target"))?;
    let src_labels = src.train.labels.clone().expect("checked above");

    let k_source = graph_k(cfg, src.train.len()).map_err(PipelineError::with(Stage::Graph, "source"))?;
    let k_target = graph_k(cfg, tgt.train.len()).map_err(PipelineError::with(Stage::Graph, "target"))?;
    let source_network =
        knn_graph(&src.train.features, k_source).map_err(PipelineError::with(Stage::Graph, "source"))?;
    let target_network =
        knn_graph(&tgt.train.features, k_target).map_err(PipelineError::with(Stage::Graph, "target"))?;
    for (name, g) in [("source", &source_network), ("target", &target_network)] {
        if !g.zero_vectors().is_empty() {
            warnings.push(format!("{} zero feature vectors in {name}", g.zero_vectors().len()));
        }
    }

    let m = cfg.m.unwrap_or_else(|| distinct(&src_labels));
    let k0 = cfg.k0.unwrap_or_else(|| default_k0(m)).max(m);
    if m == 1 {
        warnings.push("m = 1: every target observation receives one class".into());
    }
    let target_partition = cci(&target_network, &tgt.train.features, m, k0)
        .map_err(PipelineError::with(Stage::Cluster, "target"))?;
    if target_partition.k() < m {
        warnings.push(format!(
            "target yielded {} clusters, fewer than m = {m}",
            target_partition.k()
        ));
    }

    let (source_partition, source_graph) = match cfg.source_clustering {
        SourceClustering::Labels => {
            let g = from_labels(&source_network, &src_labels)
                .map_err(PipelineError::with(Stage::DependencyGraph, "source"))?;
            (Partition::compact(&src_labels).0, g)
        }
        SourceClustering::Cci => {
            let p = cci(&source_network, &src.train.features, m, k0)
                .map_err(PipelineError::with(Stage::Cluster, "source"))?;
            let g = build_dependency_graph(&source_network, &p)
                .and_then(|g| g.with_class_ids(cluster_classes(&p, &src_labels)))
                .map_err(PipelineError::with(Stage::DependencyGraph, "source"))?;
            (p, g)
        }
    };
    let target_graph = build_dependency_graph(&target_network, &target_partition)
        .map_err(PipelineError::with(Stage::DependencyGraph, "target"))?;

    let label_map = optimal_label_learning(&target_graph, &source_graph)
        .map_err(PipelineError::with(Stage::Matching, "label learning"))?;
    if !label_map.low_confidence.is_empty() {
        warnings.push(format!(
            "target clusters {:?} matched dummy source nodes",
            label_map.low_confidence
        ));
    }
    let assigned_labels = assign_labels(&target_partition, &label_map)
        .map_err(PipelineError::with(Stage::Matching, "assign labels"))?;

    let classes = src_labels
        .iter()
        .chain(target.labels.iter().flatten())
        .max()
        .map_or(1, |c| c + 1)
        .max(source.class_count().unwrap_or(0));

    let model = knn_train(&tgt.train.features, &assigned_labels, cfg.k_c.min(tgt.train.len()))
        .map_err(PipelineError::with(Stage::Classify, "transferred labels"))?;
    let mut report = EvaluationReport {
        labeling_accuracy: None,
        macro_f1: None,
        upper_bound_f1: None,
        per_class_f1: None,
        confusion: None,
        nmi: None,
        purity: None,
        cluster_to_class: label_map.cluster_to_class.clone(),
        low_confidence: label_map.low_confidence.clone(),
        metadata: RunMetadata {
            k_target,
            k_source,
            k0,
            m,
            k_c: cfg.k_c,
            seed: cfg.seed,
            source_clustering: cfg.source_clustering.to_string(),
            standardized: cfg.standardize,
            reduce_dim: cfg.reduce_dim,
            n_source: source.len(),
            n_target: target.len(),
            target_clusters: target_partition.k(),
        },
        warnings: Vec::new(),
    };

    if let (Some(train_truth), Some(test_truth)) = (&tgt.train.labels, &tgt.test.labels) {
        let stage = PipelineError::with(Stage::Classify, "evaluation");
        let eval = (|| -> Result<(), Error> {
            report.labeling_accuracy = Some(labeling_accuracy(&assigned_labels, train_truth)?);
            report.nmi = Some(nmi(train_truth, target_partition.cluster_of())?);
            report.purity = Some(purity(train_truth, target_partition.cluster_of())?);
            if !test_truth.is_empty() {
                let pred = model.predict_all(&tgt.test.features)?;
                let cm = confusion_matrix(&pred, test_truth, classes)?;
                let f1 = per_class_f1(&cm);
                report.macro_f1 = Some(f1.iter().sum::<f64>() / classes as f64);
                report.per_class_f1 = Some(f1);
                report.confusion = Some(cm);

                let oracle = knn_train(&tgt.train.features, train_truth, cfg.k_c.min(tgt.train.len()))?;
                let ub = oracle.predict_all(&tgt.test.features)?;
                let ub_f1 = per_class_f1(&confusion_matrix(&ub, test_truth, classes)?);
                report.upper_bound_f1 = Some(ub_f1.iter().sum::<f64>() / classes as f64);
            }
            Ok(())
        })();
        eval.map_err(stage)?;
    }
    report.warnings = warnings;
    for w in &report.warnings {
        log::warn!("{w}");
    }

    Ok(RunOutcome {
        report,
        label_map,
        target_network,
        source_network,
        target_partition,
        source_partition,
        target_graph,
        source_graph,
        assigned_labels,
        target_features: tgt.train.features,
    })
}

/// Artifact file names inside an output directory.
pub mod artifacts {
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_CSV: &str = "report.csv";
    pub const LABEL_MAP: &str = "label_map.json";
    pub const TARGET_PARTITION: &str = "target_partition.csv";
    pub const SOURCE_PARTITION: &str = "source_partition.csv";
    pub const TARGET_DEPGRAPH: &str = "target_depgraph.json";
    pub const SOURCE_DEPGRAPH: &str = "source_depgraph.json";
    pub const TARGET_EDGES: &str = "target_edges.csv";
    pub const SOURCE_EDGES: &str = "source_edges.csv";
    pub const ASSIGNED_LABELS: &str = "assigned_labels.csv";
}

pub fn report_to_json(report: &EvaluationReport) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvaluationReport, Error> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&s)?)
}

/// Flat row for cross-run tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub dataset: String,
    pub method: String,
    pub labeling_accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub nmi: Option<f64>,
    pub purity: Option<f64>,
}

/// Two rows: the transferred-label model and the true-label upper bound.
pub fn report_rows(report: &EvaluationReport, scenario: &str, dataset: &str) -> Vec<ReportRow> {
    vec![
        ReportRow {
            scenario: scenario.into(),
            dataset: dataset.into(),
            method: "transfer".into(),
            labeling_accuracy: report.labeling_accuracy,
            f1: report.macro_f1,
            nmi: report.nmi,
            purity: report.purity,
        },
        ReportRow {
            scenario: scenario.into(),
            dataset: dataset.into(),
            method: "upper-bound".into(),
            labeling_accuracy: None,
            f1: report.upper_bound_f1,
            nmi: None,
            purity: None,
        },
    ]
}

fn write_text(path: &Path, s: &str) -> Result<(), Error> {
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, Error> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_report_rows(rows: &[ReportRow], path: &Path) -> Result<(), Error> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_fail(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report_rows(path: &Path) -> Result<Vec<ReportRow>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_fail(path))?;
    r.deserialize().map(|row| row.map_err(csv_fail(path))).collect()
}

/// Writes per-vertex labels as `vertex,label`.
pub fn write_labels_csv(labels: &[usize], path: &Path) -> Result<(), Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["vertex", "label"]).map_err(csv_fail(path))?;
    for (v, l) in labels.iter().enumerate() {
        w.write_record([v.to_string(), l.to_string()]).map_err(csv_fail(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_fail(path))?;
    let mut rows: Vec<(usize, usize)> = r
        .deserialize()
        .map(|row| row.map_err(csv_fail(path)))
        .collect::<Result<_, _>>()?;
    rows.sort_unstable();
    if rows.iter().enumerate().any(|(i, &(v, _))| i != v) {
        return Err(Error::InvalidInput(format!("{}: vertices must be 0..n", path.display())));
    }
    Ok(rows.into_iter().map(|(_, l)| l).collect())
}

impl RunOutcome {
    /// Writes every artifact into `dir`, creating it if needed.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), PipelineError> {
        let out = PipelineError::with(Stage::Output, "writing artifacts");
        (|| -> Result<(), Error> {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            use artifacts::*;
            write_text(&dir.join(REPORT_JSON), &report_to_json(&self.report)?)?;
            write_report_rows(&report_rows(&self.report, "", ""), &dir.join(REPORT_CSV))?;
            self.label_map.write_json(dir.join(LABEL_MAP))?;
            self.target_partition.write_csv(dir.join(TARGET_PARTITION))?;
            self.source_partition.write_csv(dir.join(SOURCE_PARTITION))?;
            self.target_graph.write_json(dir.join(TARGET_DEPGRAPH))?;
            self.source_graph.write_json(dir.join(SOURCE_DEPGRAPH))?;
            self.target_network.write_edges_csv(dir.join(TARGET_EDGES))?;
            self.source_network.write_edges_csv(dir.join(SOURCE_EDGES))?;
            write_labels_csv(&self.assigned_labels, &dir.join(ASSIGNED_LABELS))
        })()
        .map_err(out)
    }
}

/// Runs the pipeline once per `k`, keeping failures alongside successes.
pub fn sweep_k(cfg: &RunConfig, ks: &[usize]) -> Vec<(usize, Result<EvaluationReport, PipelineError>)> {
    ks.iter()
        .map(|&k| {
            let c = RunConfig {
                k: Some(k),
                ..cfg.clone()
            };
            (k, run_pipeline(&c).map(|o| o.report))
        })
        .collect()
}
