//! Run reports and their rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::changepoint::SuiteResult;
use crate::config::PipelineConfig;
use crate::field::GridSpec;
use crate::saem::MixtureParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// False when clustering was skipped and everything is one cluster.
    pub fitted: bool,
    pub windows: usize,
    pub anomaly_windows: usize,
    /// Weight of the first component from the unsmoothed fit.
    pub beta_em: f64,
    /// Mean smoothed posterior, used for the final labels.
    pub beta_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Voxel-space box `[min, max]` of the anomalous windows, trimmed per
    /// axis by [`crate::pipeline::BOX_TRIM`].
    pub anomaly_box: Option<[[f64; 3]; 2]>,
    pub params: Option<MixtureParams>,
}

impl ClusterSummary {
    pub fn single(windows: usize) -> Self {
        ClusterSummary {
            fitted: false,
            windows,
            anomaly_windows: 0,
            beta_em: 1.0,
            beta_hat: 1.0,
            iterations: 0,
            converged: true,
            anomaly_box: None,
            params: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: PipelineConfig,
    pub grid: GridSpec,
    pub fibres: Option<usize>,
    pub occupied_cells: usize,
    pub windows: usize,
    pub suite: SuiteResult,
    pub anomaly_detected: bool,
    pub clustering: ClusterSummary,
    pub timings: Vec<StageTiming>,
}

impl Report {
    /// Copy without wall-clock data, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        Report {
            timings: Vec::new(),
            ..self.clone()
        }
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let g = &report.grid;
    let _ = writeln!(
        s,
        "grid {}x{}x{} cells of {} voxels, window factor {}, {} occupied cells, {} windows",
        g.cells[0],
        g.cells[1],
        g.cells[2],
        g.cell_edge,
        g.window,
        report.occupied_cells,
        report.windows
    );
    if let Some(n) = report.fibres {
        let _ = writeln!(s, "fibres {n}");
    }
    let _ = writeln!(
        s,
        "{:<10} {:>12} {:>12} {:>12} {:>12} {:>7}",
        "attribute", "variance", "statistic", "critical", "p-bound", "reject"
    );
    for r in &report.suite.results {
        let _ = writeln!(
            s,
            "{:<10} {:>12} {:>12} {:>12} {:>12} {:>7}",
            r.attribute,
            r.sample_variance.map(sci).unwrap_or_else(|| "-".into()),
            sci(r.statistic),
            sci(r.y_alpha),
            sci(r.p_bound),
            if r.reject { "yes" } else { "no" }
        );
    }
    let _ = writeln!(
        s,
        "anomaly detected: {} (alpha {})",
        if report.anomaly_detected { "yes" } else { "no" },
        report.suite.alpha
    );
    let c = &report.clustering;
    if c.fitted {
        let _ = writeln!(
            s,
            "clusters: {} of {} windows anomalous, beta_hat {:.4}, {} iterations{}",
            c.anomaly_windows,
            c.windows,
            c.beta_hat,
            c.iterations,
            if c.converged { "" } else { " (not converged)" }
        );
        if let Some([lo, hi]) = c.anomaly_box {
            let _ = writeln!(s, "anomaly box: [{:?}, {:?}]", lo, hi);
        }
    } else {
        let _ = writeln!(s, "clusters: single cluster of {} windows", c.windows);
    }
    for t in &report.timings {
        let _ = writeln!(s, "time {:<8} {:.3}s", t.stage, t.seconds);
    }
    s
}

pub fn emit_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Text => Ok(render_text(report)),
    }
}
