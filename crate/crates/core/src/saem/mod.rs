//! Two-component Gaussian mixture clustering of window attributes by
//! stochastic-approximation EM, with a spatial smoothing stage that averages
//! admissible label fields.
//!
//! Internally label `true` (posterior q) always refers to the first
//! component.

mod classify;
mod em;
mod fit;
mod mixture;
mod spatial;

pub use classify::{classify, three_sigma_baseline, Label};
pub use em::{e_step, em_m_step, group_statistics, sample_labels, sem_step, MIN_COMPONENT_WEIGHT};
pub use fit::{median_split_init, saem_fit, SaemConfig, SaemFit};
pub use mixture::{
    ln_mixture_density, log_likelihood, mixture_density, Component, MixtureParams, COVARIANCE_FLOOR,
};
pub use spatial::{
    is_admissible, neighbour_lists, same_label_counts, spatial_smooth, PosteriorField,
    SmoothResult, REPAIR_PASSES,
};

use nalgebra::DVector;

/// Coordinate-wise standardisation to zero mean and unit sample variance;
/// constant coordinates are only centred.
pub fn standardize(data: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let n = data.len();
    if n == 0 {
        return Vec::new();
    }
    let d = data[0].len();
    let mut mean = vec![0.0; d];
    for x in data {
        for k in 0..d {
            mean[k] += x[k];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut sd = vec![0.0; d];
    for x in data {
        for k in 0..d {
            sd[k] += (x[k] - mean[k]).powi(2);
        }
    }
    for (s, m) in sd.iter_mut().zip(&mean) {
        *s = if n > 1 {
            (*s / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        // rounding noise around a constant column
        if *s <= 1e-12 * (1.0 + m.abs()) {
            *s = 0.0;
        }
    }
    data.iter()
        .map(|x| {
            DVector::from_iterator(
                d,
                (0..d).map(|k| {
                    let c = x[k] - mean[k];
                    if sd[k] > 0.0 {
                        c / sd[k]
                    } else {
                        c
                    }
                }),
            )
        })
        .collect()
}
