//! Stage orchestration: simulate, fields, test, cluster.
//!
//! Each stage is available on its own; [`run_pipeline`] chains them, writes
//! the artifacts into the output directory and assembles a [`Report`].

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::changepoint::{
    critical_value, enumerate_theta, run_attribute_suite, BoxSums, FamilyBound, SuiteResult,
    TailBoundParams, ThetaGrid,
};
use crate::config::{
    AttributeSet, ClusterConfig, ClusterMode, EntropyConfig, PipelineConfig, SimulationConfig,
    TestConfig,
};
use crate::field::{
    compute_mld, entropy_field, fold_attributes, partition_windows, DirectionField, FoldedFields,
    GridSpec, ScalarField3, WindowAggregate, WindowPartition,
};
use crate::io;
use crate::report::{ClusterSummary, Report, StageTiming};
use crate::rng::{seeded, stage_seed};
use crate::saem::{
    classify, median_split_init, saem_fit, spatial_smooth, standardize, Label, PosteriorField,
    SaemFit, SmoothResult,
};
use crate::sim::{generate_rsa, local_direction_field, voxelize, Fibre};
use crate::{Error, Result};

const SIMULATE_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 4;

/// Fraction of anomalous windows trimmed from each end, per axis, when
/// forming the anomaly bounding box.
pub const BOX_TRIM: f64 = 0.025;

pub const FIBRES_FILE: &str = "fibres.csv";
pub const VOLUME_FILE: &str = "volume.raw";
pub const GRID_FILE: &str = "grid.json";
pub const DIRECTIONS_FILE: &str = "directions.csv";
pub const FIELD_FILES: [&str; 3] = ["field_x.csv", "field_y.csv", "field_z.csv"];
pub const ENTROPY_FILE: &str = "entropy.csv";
pub const WINDOWS_FILE: &str = "windows.json";
pub const TEST_FILE: &str = "test.json";
pub const POSTERIORS_FILE: &str = "posteriors.csv";
pub const MIXTURE_FILE: &str = "mixture.json";
pub const REPORT_FILE: &str = "report.json";

pub fn simulate(cfg: &SimulationConfig, seed: u64) -> Result<Vec<Fibre>> {
    let rsa = cfg.rsa(seed)?;
    generate_rsa(&rsa, &mut seeded(stage_seed(seed, SIMULATE_STREAM)))
}

/// Voxel dimensions of a simulated domain.
pub fn volume_dims(cfg: &SimulationConfig) -> [usize; 3] {
    cfg.dims.map(|d| d.ceil() as usize)
}

/// Everything derived from a direction field.
#[derive(Clone, Debug)]
pub struct Fields {
    pub directions: DirectionField,
    pub folded: FoldedFields,
    pub partition: WindowPartition,
    /// Non-empty windows with MLD and, where defined, entropy.
    pub windows: Vec<WindowAggregate>,
    pub entropy: ScalarField3,
}

impl Fields {
    pub fn grid(&self) -> &GridSpec {
        self.directions.grid()
    }
}

pub fn compute_fields(directions: DirectionField, cfg: &EntropyConfig) -> Result<Fields> {
    let folded = fold_attributes(&directions);
    let partition = partition_windows(&directions)?;
    let entropy = entropy_field(&directions, &partition, &cfg.field_config())?;
    let mut windows = compute_mld(&directions, &partition);
    for w in &mut windows {
        w.entropy = entropy.get(w.window);
    }
    Ok(Fields {
        directions,
        folded,
        partition,
        windows,
        entropy,
    })
}

pub fn fields_from_fibres(
    fibres: &[Fibre],
    grid: &GridSpec,
    cfg: &EntropyConfig,
) -> Result<Fields> {
    compute_fields(local_direction_field(fibres, grid)?, cfg)
}

pub fn run_tests(fields: &Fields, cfg: &TestConfig) -> Result<SuiteResult> {
    run_attribute_suite(
        &fields.folded.x,
        &fields.folded.y,
        &fields.folded.z,
        &fields.entropy,
        cfg.directions.into(),
        cfg.entropy.into(),
        cfg.alpha,
    )
}

/// Attribute vectors of the windows used for clustering.
pub fn cluster_data(
    windows: &[WindowAggregate],
    attributes: AttributeSet,
) -> (Vec<[usize; 3]>, Vec<Vec<f64>>) {
    windows
        .iter()
        .filter_map(|w| {
            let v = match (attributes, w.entropy) {
                (AttributeSet::Mld, _) => w.mld.to_vec(),
                (AttributeSet::Entropy, Some(e)) => vec![e],
                (AttributeSet::Combined, Some(e)) => vec![e, w.mld[0], w.mld[1], w.mld[2]],
                (_, None) => return None,
            };
            Some((w.window, v))
        })
        .unzip()
}

#[derive(Clone, Debug)]
pub struct ClusterOutcome {
    pub fit: SaemFit,
    /// Frozen SAEM posteriors on the windows.
    pub posterior: PosteriorField,
    /// Labels from the unsmoothed posteriors.
    pub raw_labels: Vec<Label>,
    pub smoothed: Option<SmoothResult>,
    pub beta_hat: f64,
    pub labels: Vec<Label>,
}

impl ClusterOutcome {
    pub fn final_posterior(&self) -> &PosteriorField {
        self.smoothed
            .as_ref()
            .map_or(&self.posterior, |s| &s.posterior)
    }

    pub fn summary(&self) -> ClusterSummary {
        let post = self.final_posterior();
        let anomalous: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i] == Label::Anomaly)
            .collect();
        let n = anomalous.len();
        let anomaly_box = (n > 0).then(|| {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for k in 0..3 {
                let mut v: Vec<f64> = anomalous.iter().map(|&i| post.vertex(i)[k]).collect();
                v.sort_by(f64::total_cmp);
                let a = (BOX_TRIM * n as f64).floor() as usize;
                let b = ((1.0 - BOX_TRIM) * n as f64).ceil() as usize;
                lo[k] = v[a.min(n - 1)];
                hi[k] = v[b.clamp(1, n) - 1] + post.spacing;
            }
            [lo, hi]
        });
        ClusterSummary {
            fitted: true,
            windows: self.labels.len(),
            anomaly_windows: n,
            beta_em: self.fit.params.beta,
            beta_hat: self.beta_hat,
            iterations: self.fit.iterations,
            converged: self.fit.converged,
            anomaly_box,
            params: Some(self.fit.params.clone()),
        }
    }
}

pub fn cluster(fields: &Fields, cfg: &ClusterConfig, seed: u64) -> Result<ClusterOutcome> {
    let (windows, raw) = cluster_data(&fields.windows, cfg.attributes);
    let data: Vec<DVector<f64>> = standardize(&raw);
    let saem = cfg.saem(seed);
    let mut rng = seeded(stage_seed(seed, CLUSTER_STREAM));
    let init = median_split_init(&data)?;
    let fit = saem_fit(&data, &init, &saem, &mut rng)?;
    let g = fields.grid();
    let posterior = PosteriorField::new(windows, fit.q.clone(), g.cell_edge * g.window as f64)?;
    let raw_labels = classify(&posterior.q, fit.params.beta);
    let (smoothed, beta_hat, labels) = if cfg.spatial {
        let s = spatial_smooth(&posterior, &saem, &mut rng, false)?;
        let b = s.posterior.mean();
        let labels = classify(&s.posterior.q, b);
        (Some(s), b, labels)
    } else {
        (None, fit.params.beta, raw_labels.clone())
    };
    Ok(ClusterOutcome {
        fit,
        posterior,
        raw_labels,
        smoothed,
        beta_hat,
        labels,
    })
}

/// Grid for an input direction file.
fn input_grid(cfg: &PipelineConfig, path: &Path, cells: Option<[usize; 3]>) -> Result<GridSpec> {
    let cells = match cells {
        Some(c) => c,
        None => io::load_direction_field(path, None)?.dims(),
    };
    GridSpec::new(cfg.grid.cell_edge, cells, cfg.grid.window)
}

pub fn save_fields(dir: &Path, fields: &Fields) -> Result<()> {
    io::save_json(&dir.join(GRID_FILE), fields.grid())?;
    io::save_direction_field(&dir.join(DIRECTIONS_FILE), &fields.directions)?;
    for (k, name) in FIELD_FILES.iter().enumerate() {
        io::save_scalar_field(&dir.join(name), fields.folded.get(k))?;
    }
    io::save_scalar_field(&dir.join(ENTROPY_FILE), &fields.entropy)?;
    io::save_json(&dir.join(WINDOWS_FILE), &fields.windows)
}

/// Reloads the direction field written by [`save_fields`] and recomputes
/// the derived fields.
pub fn load_fields(dir: &Path, cfg: &EntropyConfig) -> Result<Fields> {
    let grid: GridSpec = serde_json::from_slice(&fs::read(dir.join(GRID_FILE))?)?;
    let directions = io::load_direction_field(&dir.join(DIRECTIONS_FILE), Some(grid))?;
    compute_fields(directions, cfg)
}

pub fn save_cluster(dir: &Path, outcome: &ClusterOutcome) -> Result<()> {
    io::save_posteriors(
        &dir.join(POSTERIORS_FILE),
        outcome.final_posterior(),
        &outcome.labels,
    )?;
    io::save_json(&dir.join(MIXTURE_FILE), &outcome.summary())
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        log::info!("stage {stage}");
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(out)
    }
}

/// Runs every stage. Clustering follows the configured mode; with
/// `on_reject` an accepted null gives a single cluster.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let out = cfg.out.as_deref();
    let mut timer = Timer(Vec::new());
    let mut fibre_count = None;
    let fields = match (&cfg.simulation, &cfg.input) {
        (Some(sim), None) => {
            let fibres = timer.run("simulate", || {
                let fibres = simulate(sim, cfg.seed)?;
                if let Some(dir) = out {
                    io::save_fibres(&dir.join(FIBRES_FILE), &fibres)?;
                    if sim.voxelize {
                        let v = voxelize(&fibres, volume_dims(sim));
                        io::save_volume(&dir.join(VOLUME_FILE), &v, 1.0)?;
                    }
                }
                Ok(fibres)
            })?;
            fibre_count = Some(fibres.len());
            timer.run("fields", || {
                let grid = GridSpec::for_domain(sim.dims, cfg.grid.cell_edge, cfg.grid.window)?;
                fields_from_fibres(&fibres, &grid, &cfg.entropy)
            })?
        }
        (None, Some(input)) => timer.run("fields", || {
            let grid = input_grid(cfg, &input.directions, input.cells)?;
            let directions = io::load_direction_field(&input.directions, Some(grid))?;
            compute_fields(directions, &cfg.entropy)
        })?,
        _ => return Err(Error::invalid("specify either simulation or input")),
    };
    if let Some(dir) = out {
        save_fields(dir, &fields).map_err(|e| e.in_stage("fields"))?;
    }
    let suite = timer.run("test", || {
        let s = run_tests(&fields, &cfg.test)?;
        if let Some(dir) = out {
            io::save_json(&dir.join(TEST_FILE), &s)?;
        }
        Ok(s)
    })?;
    let do_cluster = match cfg.cluster.mode {
        ClusterMode::Always => true,
        ClusterMode::Never => false,
        ClusterMode::OnReject => suite.reject,
    };
    let clustering = if do_cluster {
        timer.run("cluster", || {
            let c = cluster(&fields, &cfg.cluster, cfg.seed)?;
            if let Some(dir) = out {
                save_cluster(dir, &c)?;
            }
            Ok(c.summary())
        })?
    } else {
        ClusterSummary::single(fields.windows.len())
    };
    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        grid: *fields.grid(),
        fibres: fibre_count,
        occupied_cells: fields.directions.occupied(),
        windows: fields.windows.len(),
        anomaly_detected: suite.reject,
        suite,
        clustering,
        timings: timer.0,
    };
    if let Some(dir) = out {
        io::save_json(&dir.join(REPORT_FILE), &report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueRow {
    pub m: usize,
    pub sigma2: f64,
    pub m0: f64,
    pub y_alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub dims: [usize; 3],
    pub alpha: f64,
    pub theta: ThetaGrid,
    pub theta_count: usize,
    pub rows: Vec<CriticalValueRow>,
}

/// Critical values on a fully occupied grid for every (m, σ²) pair; `m0`
/// defaults to σ.
pub fn critical_value_table(
    dims: [usize; 3],
    theta: &ThetaGrid,
    ms: &[usize],
    sigma2s: &[f64],
    m0: Option<f64>,
    alpha: f64,
) -> Result<CriticalValueTable> {
    let sums = BoxSums::new(&ScalarField3::zeros(dims));
    let thetas = enumerate_theta(&sums, theta)?;
    if thetas.is_empty() {
        return Err(Error::invalid("box lattice is empty"));
    }
    let mut rows = Vec::with_capacity(ms.len() * sigma2s.len());
    for &sigma2 in sigma2s {
        for &m in ms {
            let params = TailBoundParams {
                m,
                sigma2,
                m0: m0.unwrap_or(sigma2.sqrt()),
            };
            let family = FamilyBound::new(&thetas, params)?;
            rows.push(CriticalValueRow {
                m,
                sigma2,
                m0: params.m0,
                y_alpha: critical_value(&family, alpha)?,
            });
        }
    }
    Ok(CriticalValueTable {
        dims,
        alpha,
        theta: *theta,
        theta_count: thetas.len(),
        rows,
    })
}

/// Fraction of windows whose label disagrees with the truth.
pub fn misclassification(labels: &[Label], truth: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = labels
        .iter()
        .zip(truth)
        .filter(|(l, &t)| (**l == Label::Anomaly) != t)
        .count();
    wrong as f64 / labels.len() as f64
}

/// Mean of the per-class error rates; classes absent from `truth` are skipped.
pub fn balanced_misclassification(labels: &[Label], truth: &[bool]) -> f64 {
    let mut wrong = [0usize; 2];
    let mut total = [0usize; 2];
    for (l, &t) in labels.iter().zip(truth) {
        total[t as usize] += 1;
        if (*l == Label::Anomaly) != t {
            wrong[t as usize] += 1;
        }
    }
    let rates: Vec<f64> = (0..2)
        .filter(|&c| total[c] > 0)
        .map(|c| wrong[c] as f64 / total[c] as f64)
        .collect();
    if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    }
}

/// Jaccard index of two axis-aligned boxes given as `[min, max]`.
pub fn box_jaccard(a: [[f64; 3]; 2], b: [[f64; 3]; 2]) -> f64 {
    let vol =
        |lo: [f64; 3], hi: [f64; 3]| (0..3).map(|k| (hi[k] - lo[k]).max(0.0)).product::<f64>();
    let lo = [0, 1, 2].map(|k| a[0][k].max(b[0][k]));
    let hi = [0, 1, 2].map(|k| a[1][k].min(b[1][k]));
    let inter = vol(lo, hi);
    let union = vol(a[0], a[1]) + vol(b[0], b[1]) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Truth labels from window centres: a window is anomalous when its centre
/// lies in the z-slab `[lo, hi)`.
pub fn slab_truth(windows: &[[usize; 3]], spacing: f64, slab: (f64, f64)) -> Vec<bool> {
    windows
        .iter()
        .map(|w| {
            let c = (w[2] as f64 + 0.5) * spacing;
            c >= slab.0 && c < slab.1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_of_identical_and_disjoint_boxes() {
        let a = [[0.0; 3], [1.0; 3]];
        assert_eq!(box_jaccard(a, a), 1.0);
        assert_eq!(box_jaccard(a, [[2.0; 3], [3.0; 3]]), 0.0);
        let half = [[0.0; 3], [1.0, 1.0, 0.5]];
        assert!((box_jaccard(a, half) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn balanced_error_weighs_classes_equally() {
        use Label::*;
        let labels = [Homogeneous, Homogeneous, Homogeneous, Anomaly];
        let truth = [false, false, true, true];
        assert!((misclassification(&labels, &truth) - 0.25).abs() < 1e-12);
        assert!((balanced_misclassification(&labels, &truth) - 0.25).abs() < 1e-12);
        let truth = [false, false, false, true];
        assert_eq!(balanced_misclassification(&labels, &truth), 0.0);
    }
}
