use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::em::{e_step, em_m_step, sem_step};
use super::mixture::MixtureParams;
use crate::{Error, Result};

/// Settings of the SAEM iteration and of the spatial smoothing stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaemConfig {
    /// λ_k = c / (c + k²).
    pub lambda_scale: f64,
    /// Stop when Σ_l |q_l^(k−1) − q_l^(k)| ≤ tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Neighbourhood radius in window-index units (Chebyshev distance).
    pub radius: usize,
    /// Minimal number of same-label neighbours for an admissible labelling.
    pub min_neighbours: usize,
    /// Number of admissible label fields averaged in the spatial stage.
    pub fields: usize,
    /// Resampling attempts allowed per admissible field.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for SaemConfig {
    fn default() -> Self {
        SaemConfig {
            lambda_scale: 50.0,
            tolerance: 1e-4,
            max_iterations: 500,
            radius: 1,
            min_neighbours: 3,
            fields: 1000,
            max_attempts: 10_000,
            seed: 0,
        }
    }
}

impl SaemConfig {
    pub fn lambda(&self, k: usize) -> f64 {
        let k2 = (k * k) as f64;
        self.lambda_scale / (self.lambda_scale + k2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_scale > 0.0) || !(self.tolerance >= 0.0) || self.max_iterations == 0 {
            return Err(Error::invalid(
                "SAEM needs lambda_scale > 0, tolerance >= 0, max_iterations >= 1",
            ));
        }
        if self.fields == 0 || self.max_attempts == 0 || self.radius == 0 {
            return Err(Error::invalid(
                "spatial stage needs fields, attempts and radius >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaemFit {
    /// Parameters from the deterministic (EM) branch of the last iteration.
    pub params: MixtureParams,
    /// Mixed posteriors q^(k₀).
    pub q: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn has_two_distinct(data: &[DVector<f64>]) -> bool {
    data.iter().any(|x| x != &data[0])
}

/// Initial posteriors: observations above the median of the first principal
/// component get 0.9, the others 0.1.
pub fn median_split_init(data: &[DVector<f64>]) -> Result<Vec<f64>> {
    if data.len() < 2 || !has_two_distinct(data) {
        return Err(Error::DegenerateFit {
            iteration: 0,
            reason: "need at least two distinct observations".into(),
            last_valid: None,
        });
    }
    let d = data[0].len();
    let n = data.len() as f64;
    let mean = data.iter().fold(DVector::zeros(d), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(d, d);
    for x in data {
        let c = x - &mean;
        cov.ger(1.0 / n, &c, &c, 1.0);
    }
    let eig = SymmetricEigen::new(cov);
    let imax = eig.eigenvalues.imax();
    let mut axis = eig.eigenvectors.column(imax).into_owned();
    if let Some(first) = axis.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            axis = -axis;
        }
    }
    let proj: Vec<f64> = data.iter().map(|x| (x - &mean).dot(&axis)).collect();
    let mut sorted = proj.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if proj.iter().all(|&p| p >= median) || proj.iter().all(|&p| p <= median) {
        // every projection ties with the median; fall back to a half split
        return Ok((0..data.len())
            .map(|i| if 2 * i < data.len() { 0.9 } else { 0.1 })
            .collect());
    }
    Ok(proj
        .iter()
        .map(|&p| if p > median { 0.9 } else { 0.1 })
        .collect())
}

/// SAEM: each iteration runs an EM update and a stochastic (SEM) update
/// from the shared posteriors and mixes the two posterior vectors with
/// weight λ_k on the stochastic one.
pub fn saem_fit<R: Rng + ?Sized>(
    data: &[DVector<f64>],
    init: &[f64],
    cfg: &SaemConfig,
    rng: &mut R,
) -> Result<SaemFit> {
    cfg.validate()?;
    if data.len() != init.len() {
        return Err(Error::invalid("initial posteriors do not match the data"));
    }
    if data.len() < 2 || !has_two_distinct(data) {
        return Err(Error::DegenerateFit {
            iteration: 0,
            reason: "need at least two distinct observations".into(),
            last_valid: None,
        });
    }
    let mut q = init.to_vec();
    let mut last: Option<MixtureParams> = None;
    let degenerate = |k: usize, e: Error, last: &Option<MixtureParams>| Error::DegenerateFit {
        iteration: k,
        reason: e.to_string(),
        last_valid: last.clone().map(Box::new),
    };
    for k in 1..=cfg.max_iterations {
        let em = em_m_step(data, &q).map_err(|e| degenerate(k, e, &last))?;
        let q_em = e_step(data, &em)?;
        let q_sem = match sem_step(data, &q, rng) {
            Ok((_, p)) => e_step(data, &p)?,
            Err(Error::DegenerateComponent { .. }) => q_em.clone(),
            Err(e) => return Err(e),
        };
        let lambda = cfg.lambda(k);
        let next: Vec<f64> = q_sem
            .iter()
            .zip(&q_em)
            .map(|(s, e)| lambda * s + (1.0 - lambda) * e)
            .collect();
        let change: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        q = next;
        last = Some(em);
        if change <= cfg.tolerance {
            return Ok(SaemFit {
                params: last.expect("set above"),
                q,
                iterations: k,
                converged: true,
            });
        }
    }
    Ok(SaemFit {
        params: last.expect("at least one iteration"),
        q,
        iterations: cfg.max_iterations,
        converged: false,
    })
}
