//! Nonparametric entropy estimation for directional samples on S².
//!
//! Two estimators are provided: the kernel plug-in estimator
//! −(1/n) Σ ln f̂(Xᵢ) and the nearest-neighbour estimator
//! (d/n) Σ ln ρᵢ + ln(c(n − 1)) + γ, optionally with a penalty radius that
//! drops (near-)duplicate points. [`reference`] computes exact entropies of
//! known densities by quadrature.

mod index;
mod kernel;
mod nn;
pub mod reference;

pub use index::SphereIndex;
pub use kernel::{
    calibrate_bandwidth, kernel_density_at, plugin_entropy, plugin_entropy_sample, Kernel,
    PluginConfig, PluginEstimate,
};
pub use nn::{
    nn_distances, nn_distances_brute, nn_distances_indexed, nn_entropy, nn_entropy_penalized,
    Metric, NnConfig, NnEstimate,
};
pub use reference::{acg_entropy, reference_entropy};

/// Euler–Mascheroni constant to 10 digits.
pub const EULER_GAMMA: f64 = 0.5772156649;

/// Entropy of the uniform distribution on S², ln 4π.
pub const UNIFORM_ENTROPY: f64 = 2.531_024_246_969_290_7;
