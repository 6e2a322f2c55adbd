use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::em::sample_labels;
use super::fit::SaemConfig;
use crate::rng::child;
use crate::{Error, Result};

/// Posterior probabilities of the first component per scanning window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorField {
    /// Window indices l (0-based).
    pub windows: Vec<[usize; 3]>,
    pub q: Vec<f64>,
    /// Window edge MΔ in voxels; the vertex of window l is l · spacing.
    pub spacing: f64,
}

impl PosteriorField {
    pub fn new(windows: Vec<[usize; 3]>, q: Vec<f64>, spacing: f64) -> Result<Self> {
        if windows.len() != q.len() {
            return Err(Error::invalid(
                "posterior and window lists differ in length",
            ));
        }
        if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("posterior probabilities must lie in [0, 1]"));
        }
        Ok(PosteriorField {
            windows,
            q,
            spacing,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn vertex(&self, i: usize) -> [f64; 3] {
        self.windows[i].map(|c| c as f64 * self.spacing)
    }

    /// Mean posterior, the implied weight of the first component.
    pub fn mean(&self) -> f64 {
        if self.q.is_empty() {
            return 0.0;
        }
        self.q.iter().sum::<f64>() / self.q.len() as f64
    }
}

/// Other windows within Chebyshev index distance `radius` of each window.
pub fn neighbour_lists(windows: &[[usize; 3]], radius: usize) -> Vec<Vec<usize>> {
    let pos: HashMap<[usize; 3], usize> =
        windows.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let r = radius as i64;
    windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut out = Vec::new();
            for a in -r..=r {
                for b in -r..=r {
                    for c in -r..=r {
                        let n = [w[0] as i64 + a, w[1] as i64 + b, w[2] as i64 + c];
                        if n.iter().any(|&v| v < 0) {
                            continue;
                        }
                        if let Some(&j) = pos.get(&n.map(|v| v as usize)) {
                            if j != i {
                                out.push(j);
                            }
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// a_l: number of neighbours sharing the label of window l.
pub fn same_label_counts(labels: &[bool], neighbours: &[Vec<usize>]) -> Vec<usize> {
    neighbours
        .iter()
        .enumerate()
        .map(|(i, n)| n.iter().filter(|&&j| labels[j] == labels[i]).count())
        .collect()
}

pub fn is_admissible(labels: &[bool], neighbours: &[Vec<usize>], min_neighbours: usize) -> bool {
    same_label_counts(labels, neighbours)
        .iter()
        .all(|&a| a >= min_neighbours)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothResult {
    pub posterior: PosteriorField,
    /// Label draws needed in total to collect the admissible fields.
    pub draws: usize,
    /// The admissible fields themselves, when requested.
    pub fields: Option<Vec<Vec<bool>>>,
}

/// Simultaneous flip passes tried on a draw before it is discarded.
pub const REPAIR_PASSES: usize = 8;

fn admissible_field<R: Rng + ?Sized>(
    q: &[f64],
    neighbours: &[Vec<usize>],
    cfg: &SaemConfig,
    rng: &mut R,
) -> Result<(Vec<bool>, usize)> {
    for attempt in 1..=cfg.max_attempts {
        let mut y = sample_labels(q, rng);
        for _ in 0..=REPAIR_PASSES {
            let a = same_label_counts(&y, neighbours);
            if a.iter().all(|&c| c >= cfg.min_neighbours) {
                return Ok((y, attempt));
            }
            for (yi, &ai) in y.iter_mut().zip(&a) {
                if ai < cfg.min_neighbours {
                    *yi = !*yi;
                }
            }
        }
    }
    Err(Error::SmoothingFailed {
        attempts: cfg.max_attempts,
    })
}

/// Spatial stage: draws label fields from the frozen posteriors `q0`,
/// repairs or redraws them until admissible, and returns the average of
/// `cfg.fields` admissible fields.
pub fn spatial_smooth<R: Rng + ?Sized>(
    q0: &PosteriorField,
    cfg: &SaemConfig,
    rng: &mut R,
    keep_fields: bool,
) -> Result<SmoothResult> {
    cfg.validate()?;
    let neighbours = neighbour_lists(&q0.windows, cfg.radius);
    if neighbours.iter().any(|n| n.len() < cfg.min_neighbours) {
        return Err(Error::SmoothingFailed { attempts: 0 });
    }
    let base: u64 = rng.random();
    let fields: Vec<(Vec<bool>, usize)> = (0..cfg.fields)
        .into_par_iter()
        .map(|k| admissible_field(&q0.q, &neighbours, cfg, &mut child(base, k as u64)))
        .collect::<Result<_>>()?;
    let n = q0.len();
    let mut counts = vec![0usize; n];
    for (y, _) in &fields {
        for (c, &v) in counts.iter_mut().zip(y) {
            *c += v as usize;
        }
    }
    let q = counts
        .iter()
        .map(|&c| c as f64 / cfg.fields as f64)
        .collect();
    let draws = fields.iter().map(|f| f.1).sum();
    Ok(SmoothResult {
        posterior: PosteriorField {
            windows: q0.windows.clone(),
            q,
            spacing: q0.spacing,
        },
        draws,
        fields: keep_fields.then(|| fields.into_iter().map(|f| f.0).collect()),
    })
}
