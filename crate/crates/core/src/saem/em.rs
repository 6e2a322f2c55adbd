use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::mixture::{floor_covariance, weighted_ln_densities, Component, MixtureParams};
use crate::{Error, Result};

/// Components lighter than this are considered empty.
pub const MIN_COMPONENT_WEIGHT: f64 = 1e-8;

/// Resampling attempts for SEM labels before giving up on an empty group.
pub const SEM_RESAMPLE_LIMIT: usize = 100;

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Posterior probability of the first component at every observation,
/// evaluated in log space.
pub fn e_step(data: &[DVector<f64>], params: &MixtureParams) -> Result<Vec<f64>> {
    let g = params.prepare()?;
    Ok(data
        .iter()
        .map(|x| {
            let (a, b) = weighted_ln_densities(x, params.beta, &g);
            match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
                (true, true) => 0.5,
                (false, true) => 1.0,
                (true, false) => 0.0,
                (false, false) => logistic(a - b),
            }
        })
        .collect())
}

fn check_data(data: &[DVector<f64>], weights: &[f64]) -> Result<usize> {
    if data.is_empty() || data.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} observations but {} posteriors",
            data.len(),
            weights.len()
        )));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|x| x.len() != d) {
        return Err(Error::invalid(
            "observations must share a positive dimension",
        ));
    }
    Ok(d)
}

/// Weighted mean and (maximum-likelihood) covariance.
fn weighted_component(data: &[DVector<f64>], w: &[f64], total: f64, d: usize) -> Component {
    let mut mean = DVector::zeros(d);
    for (x, &wi) in data.iter().zip(w) {
        mean.axpy(wi, x, 1.0);
    }
    mean /= total;
    let mut cov = DMatrix::zeros(d, d);
    for (x, &wi) in data.iter().zip(w) {
        let c = x - &mean;
        cov.ger(wi, &c, &c, 1.0);
    }
    cov /= total;
    Component {
        mean,
        cov: floor_covariance(&cov),
    }
}

/// M-step from soft posteriors q: weighted means and covariances per
/// component, weight β = mean of q.
pub fn em_m_step(data: &[DVector<f64>], q: &[f64]) -> Result<MixtureParams> {
    let d = check_data(data, q)?;
    let w1: Vec<f64> = q.to_vec();
    let w2: Vec<f64> = q.iter().map(|v| 1.0 - v).collect();
    let (t1, t2) = (w1.iter().sum::<f64>(), w2.iter().sum::<f64>());
    for (i, t) in [(0, t1), (1, t2)] {
        if t < MIN_COMPONENT_WEIGHT {
            return Err(Error::DegenerateComponent {
                component: i,
                weight: t,
            });
        }
    }
    let first = weighted_component(data, &w1, t1, d);
    let second = weighted_component(data, &w2, t2, d);
    MixtureParams::new(t1 / data.len() as f64, first, second)
}

/// Bernoulli(q) draw that is antisymmetric in q: with the same uniform u,
/// the label drawn for 1 − q is the complement of the label drawn for q
/// (except at q = ½ exactly).
pub(crate) fn bernoulli_label(u: f64, q: f64) -> bool {
    let v = u - 0.5;
    if q >= 0.5 {
        v < q - 0.5
    } else {
        v >= 0.5 - q
    }
}

/// Independent labels y_l ~ Bernoulli(q_l); `true` is the first component.
pub fn sample_labels<R: Rng + ?Sized>(q: &[f64], rng: &mut R) -> Vec<bool> {
    q.iter()
        .map(|&p| bernoulli_label(rng.random::<f64>(), p))
        .collect()
}

/// Hard-label statistics per group; `None` for an empty group.
pub fn group_statistics(data: &[DVector<f64>], labels: &[bool]) -> Result<[Option<Component>; 2]> {
    let w: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let d = check_data(data, &w)?;
    let nu1: f64 = w.iter().sum();
    let nu2 = data.len() as f64 - nu1;
    let w2: Vec<f64> = w.iter().map(|v| 1.0 - v).collect();
    Ok([
        (nu1 > 0.0).then(|| weighted_component(data, &w, nu1, d)),
        (nu2 > 0.0).then(|| weighted_component(data, &w2, nu2, d)),
    ])
}

/// Stochastic step: draw hard labels from q (redrawing while a group is
/// empty) and estimate the mixture from the two label groups, β = ν₁ / n.
pub fn sem_step<R: Rng + ?Sized>(
    data: &[DVector<f64>],
    q: &[f64],
    rng: &mut R,
) -> Result<(Vec<bool>, MixtureParams)> {
    check_data(data, q)?;
    let mut labels = sample_labels(q, rng);
    for _ in 0..SEM_RESAMPLE_LIMIT {
        let nu1 = labels.iter().filter(|&&y| y).count();
        if nu1 > 0 && nu1 < labels.len() {
            break;
        }
        labels = sample_labels(q, rng);
    }
    let nu1 = labels.iter().filter(|&&y| y).count();
    match group_statistics(data, &labels)? {
        [Some(a), Some(b)] => {
            let p = MixtureParams::new(nu1 as f64 / data.len() as f64, a, b)?;
            Ok((labels, p))
        }
        [a, _] => Err(Error::DegenerateComponent {
            component: if a.is_none() { 0 } else { 1 },
            weight: 0.0,
        }),
    }
}
