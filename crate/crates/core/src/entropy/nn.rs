use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::index::SphereIndex;
use super::EULER_GAMMA;
use crate::sphere::{axial_distance, geodesic_distance, ManifoldSpec, UnitVector3};
use crate::{Error, Result};

/// Samples up to this size use the exhaustive O(N²) search.
const BRUTE_FORCE_LIMIT: usize = 4096;

/// Distance used for nearest-neighbour search.
///
/// `Axial` treats u and −u as the same observation: distances are
/// arccos|⟨u, v⟩| and the estimator is that of the antipodally symmetrised
/// sample {±Xᵢ} on S², so folded axial data are not penalised at the
/// folding equator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Geodesic,
    Axial,
}

impl Metric {
    pub fn distance(self, u: &UnitVector3, v: &UnitVector3) -> f64 {
        match self {
            Metric::Geodesic => geodesic_distance(u, v),
            Metric::Axial => axial_distance(u, v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnConfig {
    /// Penalty radius ρ₀: points whose nearest neighbour is not farther than
    /// this are dropped.
    pub penalty: f64,
    pub manifold: ManifoldSpec,
    pub metric: Metric,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            penalty: 0.01,
            manifold: ManifoldSpec::SPHERE,
            metric: Metric::Geodesic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnEstimate {
    pub value: f64,
    /// Points kept after the penalty filter.
    pub filtered: usize,
    pub total: usize,
}

/// ρᵢ = min_{j≠i} ρ(Xᵢ, Xⱼ); brute force for small samples, otherwise
/// through a [`SphereIndex`].
pub fn nn_distances(samples: &[UnitVector3], metric: Metric) -> Result<Vec<f64>> {
    if samples.len() <= BRUTE_FORCE_LIMIT {
        nn_distances_brute(samples, metric)
    } else {
        nn_distances_indexed(samples, metric)
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

pub fn nn_distances_brute(samples: &[UnitVector3], metric: Metric) -> Result<Vec<f64>> {
    check_len(samples.len())?;
    Ok(samples
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            samples
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| metric.distance(u, v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

pub fn nn_distances_indexed(samples: &[UnitVector3], metric: Metric) -> Result<Vec<f64>> {
    let n = samples.len();
    check_len(n)?;
    let index = SphereIndex::new(samples, SphereIndex::width_for(n, 2.0));
    Ok(samples
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let near = |q: [f64; 3]| {
                index
                    .nearest(q, Some(i))
                    .map(|j| metric.distance(u, &samples[j]))
                    .unwrap_or(f64::INFINITY)
            };
            match metric {
                Metric::Geodesic => near(u.as_array()),
                Metric::Axial => near(u.as_array()).min(near(u.neg().as_array())),
            }
        })
        .collect())
}

fn estimate(log_sum: f64, count: usize, cfg: &NnConfig) -> f64 {
    let d = cfg.manifold.dim as f64;
    let c = cfg.manifold.density_constant;
    let n = count as f64;
    let neighbours = match cfg.metric {
        Metric::Geodesic => n - 1.0,
        Metric::Axial => 2.0 * n - 1.0,
    };
    d * log_sum / n + (c * neighbours).ln() + EULER_GAMMA
}

/// Nearest-neighbour entropy estimate without penalty.
pub fn nn_entropy(samples: &[UnitVector3], cfg: &NnConfig) -> Result<f64> {
    let rho = nn_distances(samples, cfg.metric)?;
    if let Some(index) = rho.iter().position(|&r| r == 0.0) {
        return Err(Error::ZeroDistance { index });
    }
    let log_sum: f64 = rho.iter().map(|r| r.ln()).sum();
    Ok(estimate(log_sum, rho.len(), cfg))
}

/// Penalised estimate: only points with ρᵢ > ρ₀ enter the sum, and the
/// filtered count replaces N.
pub fn nn_entropy_penalized(samples: &[UnitVector3], cfg: &NnConfig) -> Result<NnEstimate> {
    if !(cfg.penalty >= 0.0) {
        return Err(Error::invalid("penalty radius must be >= 0"));
    }
    let rho = nn_distances(samples, cfg.metric)?;
    let kept: Vec<f64> = rho.iter().copied().filter(|&r| r > cfg.penalty).collect();
    if kept.len() < 2 {
        return Err(Error::DegenerateSample {
            filtered: kept.len(),
        });
    }
    let log_sum: f64 = kept.iter().map(|r| r.ln()).sum();
    Ok(NnEstimate {
        value: estimate(log_sum, kept.len(), cfg),
        filtered: kept.len(),
        total: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn at_angle(t: f64) -> UnitVector3 {
        UnitVector3::new(t.cos(), t.sin(), 0.0).unwrap()
    }

    #[test]
    fn two_points() {
        let s = [at_angle(0.0), at_angle(0.3)];
        let rho = nn_distances(&s, Metric::Geodesic).unwrap();
        assert!((rho[0] - 0.3).abs() < 1e-12 && (rho[1] - 0.3).abs() < 1e-12);
        let cfg = NnConfig {
            penalty: 0.0,
            ..Default::default()
        };
        let e = nn_entropy(&s, &cfg).unwrap();
        let expected = 2.0 * rho[0].ln() + PI.ln() + EULER_GAMMA;
        assert!((e - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicates_give_zero_distance() {
        let s = [at_angle(0.0), at_angle(0.0), at_angle(1.0)];
        let rho = nn_distances(&s, Metric::Geodesic).unwrap();
        assert_eq!(rho[0], 0.0);
        assert_eq!(rho[1], 0.0);
        assert!(matches!(
            nn_entropy(&s, &NnConfig::default()),
            Err(Error::ZeroDistance { index: 0 })
        ));
    }

    #[test]
    fn too_few_samples() {
        assert!(nn_distances(&[UnitVector3::E1], Metric::Geodesic).is_err());
    }

    #[test]
    fn all_within_penalty_is_degenerate() {
        let s = [at_angle(0.0), at_angle(0.001), at_angle(0.002)];
        assert!(matches!(
            nn_entropy_penalized(&s, &NnConfig::default()),
            Err(Error::DegenerateSample { filtered: 0 })
        ));
    }

    #[test]
    fn axial_metric_identifies_antipodes() {
        let s = [UnitVector3::E1, UnitVector3::E1.neg()];
        let rho = nn_distances(&s, Metric::Axial).unwrap();
        assert_eq!(rho, vec![0.0, 0.0]);
    }
}
