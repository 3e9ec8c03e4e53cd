use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_fail, csv_writer};
use crate::classify::EvaluationReport;
use crate::error::{Error, Result};

/// Long-format row for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub metric: String,
    pub param: String,
    pub value: f64,
    pub dataset: String,
    pub scenario: String,
}

/// One row per present metric of every report; `param` labels the swept value.
pub fn emit_plot_data<'a>(
    reports: impl IntoIterator<Item = (String, &'a EvaluationReport)>,
    dataset: &str,
    scenario: &str,
) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for (param, r) in reports {
        let metrics = [
            ("labeling_accuracy", r.labeling_accuracy),
            ("macro_f1", r.macro_f1),
            ("upper_bound_f1", r.upper_bound_f1),
            ("nmi", r.nmi),
            ("purity", r.purity),
        ];
        for (name, v) in metrics {
            if let Some(value) = v {
                rows.push(PlotRow {
                    metric: name.into(),
                    param: param.clone(),
                    value,
                    dataset: dataset.into(),
                    scenario: scenario.into(),
                });
            }
        }
    }
    rows
}

pub fn write_plot_csv(rows: &[PlotRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_fail(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_plot_csv(path: &Path) -> Result<Vec<PlotRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_fail(path))?;
    r.deserialize().map(|row| row.map_err(csv_fail(path))).collect()
}
