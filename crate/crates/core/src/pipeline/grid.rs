use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{csv_fail, csv_writer, run_pipeline, DatasetSource, RunConfig};
use crate::classify::EvaluationReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CrossModality,
    CrossLocation,
    CrossSubject,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::CrossModality => "cross-modality",
            Scenario::CrossLocation => "cross-location",
            Scenario::CrossSubject => "cross-subject",
        }
    }
}

/// A named domain: one subject, body location or modality of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDecl {
    pub name: String,
    pub dataset: String,
    pub data: DatasetSource,
}

/// Domains that are transferred between in both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGroup {
    pub scenario: Scenario,
    pub members: Vec<String>,
}

/// Declarative experiment grid over domain pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub domains: Vec<DomainDecl>,
    pub groups: Vec<ScenarioGroup>,
    /// Shared settings; its `source`/`target` are replaced per pair.
    pub base: RunConfig,
}

/// One (source, target) run.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub scenario: Scenario,
    pub dataset: String,
    pub source: String,
    pub target: String,
    pub result: std::result::Result<EvaluationReport, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummaryRow {
    pub scenario: String,
    pub dataset: String,
    pub source: String,
    pub target: String,
    pub status: String,
    pub labeling_accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub upper_bound_f1: Option<f64>,
    pub nmi: Option<f64>,
    pub purity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub cells: Vec<GridCell>,
}

impl ScenarioGrid {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&s)?)
    }

    /// Ordered pairs without self-pairs, in declaration order.
    pub fn pairs(&self) -> Result<Vec<(Scenario, &DomainDecl, &DomainDecl)>> {
        let mut names = BTreeSet::new();
        for d in &self.domains {
            if !names.insert(d.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate domain `{}`", d.name)));
            }
        }
        let find = |n: &str| {
            self.domains
                .iter()
                .find(|d| d.name == n)
                .ok_or_else(|| Error::InvalidInput(format!("undeclared domain `{n}`")))
        };
        let mut out = Vec::new();
        for g in &self.groups {
            let members = g.members.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
            for (i, s) in members.iter().enumerate() {
                for (j, t) in members.iter().enumerate() {
                    if i != j {
                        out.push((g.scenario, *s, *t));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Runs every pair, `threads` wide (0 = all cores). Per-cell artifacts go
/// under `out/<scenario>/<source>__<target>/` when `out` is given.
pub fn run_grid(grid: &ScenarioGrid, threads: usize, out: Option<&Path>) -> Result<GridOutcome> {
    let pairs = grid.pairs()?;
    let run_one = |(scenario, s, t): &(Scenario, &DomainDecl, &DomainDecl)| {
        let cfg = RunConfig {
            source: s.data.clone(),
            target: t.data.clone(),
            ..grid.base.clone()
        };
        let result = run_pipeline(&cfg).and_then(|o| {
            if let Some(dir) = out {
                let cell_dir: PathBuf = dir
                    .join(scenario.as_str())
                    .join(format!("{}__{}", s.name, t.name));
                o.write_artifacts(&cell_dir)?;
            }
            Ok(o.report)
        });
        if let Err(e) = &result {
            log::error!("{} -> {} failed: {e}", s.name, t.name);
        }
        GridCell {
            scenario: *scenario,
            dataset: s.dataset.clone(),
            source: s.name.clone(),
            target: t.name.clone(),
            result: result.map_err(|e| e.to_string()),
        }
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| pairs.par_iter().map(run_one).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let cells = {
        let _ = threads;
        pairs.iter().map(run_one).collect()
    };
    Ok(GridOutcome { cells })
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl GridOutcome {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    /// One row per cell followed by one average row per (scenario, dataset).
    pub fn summary(&self) -> Vec<GridSummaryRow> {
        let mut rows: Vec<GridSummaryRow> = self
            .cells
            .iter()
            .map(|c| {
                let r = c.result.as_ref().ok();
                GridSummaryRow {
                    scenario: c.scenario.as_str().into(),
                    dataset: c.dataset.clone(),
                    source: c.source.clone(),
                    target: c.target.clone(),
                    status: if r.is_some() { "ok" } else { "failed" }.into(),
                    labeling_accuracy: r.and_then(|r| r.labeling_accuracy),
                    macro_f1: r.and_then(|r| r.macro_f1),
                    upper_bound_f1: r.and_then(|r| r.upper_bound_f1),
                    nmi: r.and_then(|r| r.nmi),
                    purity: r.and_then(|r| r.purity),
                    error: c.result.as_ref().err().cloned(),
                }
            })
            .collect();
        let mut groups: BTreeMap<(Scenario, &str), Vec<&EvaluationReport>> = BTreeMap::new();
        for c in &self.cells {
            let e = groups.entry((c.scenario, c.dataset.as_str())).or_default();
            if let Ok(r) = &c.result {
                e.push(r);
            }
        }
        for ((scenario, dataset), reports) in groups {
            rows.push(GridSummaryRow {
                scenario: scenario.as_str().into(),
                dataset: dataset.into(),
                source: "*".into(),
                target: "*".into(),
                status: format!("average of {}", reports.len()),
                labeling_accuracy: mean(reports.iter().map(|r| r.labeling_accuracy)),
                macro_f1: mean(reports.iter().map(|r| r.macro_f1)),
                upper_bound_f1: mean(reports.iter().map(|r| r.upper_bound_f1)),
                nmi: mean(reports.iter().map(|r| r.nmi)),
                purity: mean(reports.iter().map(|r| r.purity)),
                error: None,
            });
        }
        rows
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        for r in self.summary() {
            w.serialize(r).map_err(csv_fail(path))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SynthSpec;
    use crate::pipeline::Side;

    fn synth(seed: u64) -> DatasetSource {
        DatasetSource::Synth {
            spec: SynthSpec {
                classes: 3,
                per_class: 40,
                dim: 4,
                seed,
                ..SynthSpec::default()
            },
            side: Side::Source,
        }
    }

    fn grid(members: &[&str]) -> ScenarioGrid {
        ScenarioGrid {
            domains: ["a", "b", "c"]
                .iter()
                .enumerate()
                .map(|(i, n)| DomainDecl {
                    name: n.to_string(),
                    dataset: "toy".into(),
                    data: synth(i as u64),
                })
                .collect(),
            groups: vec![ScenarioGroup {
                scenario: Scenario::CrossSubject,
                members: members.iter().map(|s| s.to_string()).collect(),
            }],
            base: RunConfig::synthetic(SynthSpec::default()),
        }
    }

    #[test]
    fn three_members_give_six_ordered_pairs() {
        let g = grid(&["a", "b", "c"]);
        let p: Vec<_> = g.pairs().unwrap().iter().map(|(_, s, t)| (s.name.clone(), t.name.clone())).collect();
        assert_eq!(p.len(), 6);
        assert!(p.iter().all(|(s, t)| s != t));
        assert_eq!(p[0], ("a".into(), "b".into()));
    }

    #[test]
    fn undeclared_member_rejected() {
        assert!(grid(&["a", "z"]).pairs().is_err());
    }

    #[test]
    fn failed_pair_recorded_and_rest_complete() {
        let mut g = grid(&["a", "b", "c"]);
        g.domains[2].data = DatasetSource::Features {
            path: "/nonexistent/features.csv".into(),
        };
        let out = run_grid(&g, 2, None).unwrap();
        assert_eq!(out.cells.len(), 6);
        assert_eq!(out.failures(), 4);
        let ok: Vec<_> = out.cells.iter().filter(|c| c.result.is_ok()).collect();
        assert_eq!(ok.len(), 2);
    }

    #[test]
    fn averages_are_arithmetic_means() {
        let out = run_grid(&grid(&["a", "b", "c"]), 0, None).unwrap();
        let rows = out.summary();
        let avg = rows.iter().find(|r| r.source == "*").unwrap();
        let f1s: Vec<f64> = out.cells.iter().map(|c| c.result.as_ref().unwrap().macro_f1.unwrap()).collect();
        let expect = f1s.iter().sum::<f64>() / f1s.len() as f64;
        assert!((avg.macro_f1.unwrap() - expect).abs() <= 1e-12);
        assert_eq!(avg.status, "average of 6");
    }
}
