use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::index::SphereIndex;
use super::reference::adaptive_simpson;
use crate::field::DirectionField;
use crate::sphere::{geodesic_distance, UnitVector3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// K(t) = (3/4)(1 − t²) on [0, 1].
    #[default]
    Epanechnikov,
}

impl Kernel {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if t <= 1.0 {
                    0.75 * (1.0 - t * t)
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest t with K(t) > 0.
    pub fn support(self) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluginConfig {
    pub bandwidth: f64,
    pub kernel: Kernel,
    /// Half-width b of the cubic index neighbourhood B = [−b, b]³ used on
    /// direction fields.
    pub neighbourhood: usize,
}

impl Default for PluginConfig {
    fn default() -> Self {
        PluginConfig {
            bandwidth: 0.25,
            kernel: Kernel::Epanechnikov,
            neighbourhood: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluginEstimate {
    pub value: f64,
    /// Points at which the density estimate was positive.
    pub evaluated: usize,
    /// Points dropped because the density estimate was exactly zero.
    pub dropped: usize,
}

/// Kernel (sin ρ / (h² ρ)) K(ρ / h) divided by its integral over S², so
/// that averaging it over a sample gives a probability density.
#[derive(Clone, Copy, Debug)]
struct SphericalKernel {
    kernel: Kernel,
    h: f64,
    scale: f64,
}

impl SphericalKernel {
    fn new(kernel: Kernel, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
        let upper = (kernel.support() * h).min(PI);
        let f = |r: f64| r.sin() * sinc(r) / (h * h) * kernel.eval(r / h);
        let integral = 2.0 * PI * adaptive_simpson(&f, 0.0, upper, 1e-13, 50);
        Ok(SphericalKernel {
            kernel,
            h,
            scale: 1.0 / integral,
        })
    }

    fn eval(&self, rho: f64) -> f64 {
        self.scale * sinc(rho) / (self.h * self.h) * self.kernel.eval(rho / self.h)
    }

    fn reach(&self) -> f64 {
        (self.kernel.support() * self.h).min(PI)
    }
}

fn sinc(r: f64) -> f64 {
    if r.abs() < 1e-8 {
        1.0
    } else {
        r.sin().abs() / r
    }
}

fn all_identical(samples: &[UnitVector3]) -> bool {
    samples.windows(2).all(|w| w[0] == w[1])
}

/// f̂(y) = (1/n) Σ K_h(ρ(y, Xⱼ)) with the normalised spherical kernel.
pub fn kernel_density_at(
    y: &UnitVector3,
    samples: &[UnitVector3],
    cfg: &PluginConfig,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("kernel density needs at least one sample"));
    }
    let k = SphericalKernel::new(cfg.kernel, cfg.bandwidth)?;
    let s: f64 = samples
        .iter()
        .map(|x| k.eval(geodesic_distance(y, x)))
        .sum();
    Ok(s / samples.len() as f64)
}

fn finish(logs: Vec<Option<f64>>) -> Result<PluginEstimate> {
    let dropped = logs.iter().filter(|l| l.is_none()).count();
    let evaluated = logs.len() - dropped;
    if evaluated == 0 {
        return Err(Error::EstimationFailed(format!(
            "density estimate vanished at all {dropped} points"
        )));
    }
    let sum: f64 = logs.iter().flatten().sum();
    Ok(PluginEstimate {
        value: -sum / evaluated as f64,
        evaluated,
        dropped,
    })
}

/// Plug-in entropy −(1/n) Σ ln f̂(Xᵢ) where f̂ uses the whole sample
/// (including Xᵢ itself).
pub fn plugin_entropy_sample(samples: &[UnitVector3], bandwidth: f64) -> Result<PluginEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid("plug-in entropy needs at least one sample"));
    }
    let k = SphericalKernel::new(Kernel::Epanechnikov, bandwidth)?;
    if all_identical(samples) {
        return Ok(PluginEstimate {
            value: f64::NEG_INFINITY,
            evaluated: samples.len(),
            dropped: 0,
        });
    }
    let n = samples.len() as f64;
    let reach = k.reach();
    let chord = 2.0 * (0.5 * reach).sin() + 1e-12;
    let index = SphereIndex::new(
        samples,
        chord.max(SphereIndex::width_for(samples.len(), 4.0)),
    );
    let cos_reach = reach.cos();
    let logs = samples
        .par_iter()
        .map(|x| {
            let q = x.as_array();
            let mut s = 0.0;
            index.for_each_within(q, chord, |j| {
                let y = &samples[j];
                if x.dot(y) >= cos_reach - 1e-12 {
                    s += k.eval(geodesic_distance(x, y));
                }
            });
            let f = s / n;
            (f > 0.0).then(|| f.ln())
        })
        .collect();
    finish(logs)
}

/// Plug-in entropy of the window members S_l of a direction field; the
/// density at Xᵢ averages the kernel over occupied cells of i + B.
pub fn plugin_entropy(
    field: &DirectionField,
    members: &[[usize; 3]],
    cfg: &PluginConfig,
) -> Result<PluginEstimate> {
    let k = SphericalKernel::new(cfg.kernel, cfg.bandwidth)?;
    let dims = field.dims();
    let b = cfg.neighbourhood;
    let xs: Vec<UnitVector3> = members.iter().filter_map(|&i| field.get(i)).collect();
    if xs.is_empty() {
        return Err(Error::EstimationFailed(
            "window has no occupied members".into(),
        ));
    }
    if all_identical(&xs) {
        return Ok(PluginEstimate {
            value: f64::NEG_INFINITY,
            evaluated: xs.len(),
            dropped: 0,
        });
    }
    let logs = members
        .iter()
        .filter_map(|&i| field.get(i).map(|x| (i, x)))
        .map(|(i, x)| {
            let lo = i.map(|c| c.saturating_sub(b));
            let hi: [usize; 3] = std::array::from_fn(|a| (i[a] + b).min(dims[a] - 1));
            let (mut s, mut count) = (0.0, 0usize);
            for c2 in lo[2]..=hi[2] {
                for c1 in lo[1]..=hi[1] {
                    for c0 in lo[0]..=hi[0] {
                        if let Some(y) = field.get([c0, c1, c2]) {
                            s += k.eval(geodesic_distance(&x, &y));
                            count += 1;
                        }
                    }
                }
            }
            let f = s / count as f64;
            (f > 0.0).then(|| f.ln())
        })
        .collect();
    finish(logs)
}

/// Bandwidth at which the mean plug-in estimate over `replicates` equals
/// `target`, by bisection on [lo, hi]. The estimate is assumed increasing in
/// h on that bracket (the self-contribution bias shrinks as h grows).
pub fn calibrate_bandwidth(
    replicates: &[Vec<UnitVector3>],
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if replicates.is_empty() || !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(
            "calibration needs replicates and a bracket 0 < lo < hi",
        ));
    }
    let mean_at = |h: f64| -> Result<f64> {
        let mut s = 0.0;
        for r in replicates {
            s += plugin_entropy_sample(r, h)?.value;
        }
        Ok(s / replicates.len() as f64)
    };
    let (mut a, mut b) = (lo, hi);
    if mean_at(a)? > target || mean_at(b)? < target {
        return Err(Error::EstimationFailed(format!(
            "target {target} not bracketed by bandwidths [{lo}, {hi}]"
        )));
    }
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if mean_at(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-6 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
