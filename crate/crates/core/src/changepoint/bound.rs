use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BoxParam;
use crate::{Error, Result};

/// Dependence range m, variance bound σ² and increment bound M₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBoundParams {
    pub m: usize,
    pub sigma2: f64,
    pub m0: f64,
}

impl TailBoundParams {
    /// Gaussian-like fields: M₀ = σ.
    pub fn gaussian(m: usize, sigma2: f64) -> Self {
        TailBoundParams {
            m,
            sigma2,
            m0: sigma2.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || !(self.sigma2 > 0.0) || !(self.m0 > 0.0) {
            return Err(Error::invalid(format!(
                "tail bound needs m >= 1, sigma2 > 0, M0 > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// ln of the two-regime bound on P(|η(θ)| ≥ y) for a box with `small`
/// occupied cells on its smaller side and `large` on the other, |W| =
/// small + large.
fn ln_eta(y: f64, small: f64, large: f64, w: f64, p: &TailBoundParams) -> f64 {
    let m3 = (p.m as f64).powi(3);
    let (s2, m0) = (p.sigma2, p.m0);
    if y <= s2 * w / (m0 * large) {
        LN_2 - y * y * small * large / (4.0 * m3 * s2 * w)
    } else {
        LN_2 - y * small / (2.0 * m0 * m3) + s2 * w * small / (4.0 * m0 * m0 * m3 * large)
    }
}

/// Bound on P(|η(θ)| ≥ y) for |I_θ| = `inside` ≤ |I_θᶜ| = `outside` in a
/// window of `w` cells. Both regimes are exponential, so it never exceeds 2.
pub fn eta_tail_bound(
    y: f64,
    inside: usize,
    outside: usize,
    w: usize,
    params: &TailBoundParams,
) -> Result<f64> {
    params.validate()?;
    if inside > outside {
        return Err(Error::invalid(format!(
            "inside count {inside} exceeds outside count {outside}"
        )));
    }
    if !(y > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {y}"
        )));
    }
    Ok(ln_eta(y, inside as f64, outside as f64, w as f64, params).exp())
}

/// Family bound Σ_θ P(|η(θ)| ≥ y) with boxes grouped by their (smaller,
/// larger) occupied side counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyBound {
    groups: Vec<(usize, usize, usize)>,
    params: TailBoundParams,
    size: usize,
}

impl FamilyBound {
    pub fn new(thetas: &[BoxParam], params: TailBoundParams) -> Result<Self> {
        Self::from_sizes(thetas.iter().map(|t| (t.inside, t.outside)), params)
    }

    /// Builds the family from (inside, outside) occupied counts.
    pub fn from_sizes(
        sizes: impl IntoIterator<Item = (usize, usize)>,
        params: TailBoundParams,
    ) -> Result<Self> {
        params.validate()?;
        let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut size = 0;
        for (a, b) in sizes {
            if a == 0 || b == 0 {
                continue;
            }
            *map.entry((a.min(b), a.max(b))).or_default() += 1;
            size += 1;
        }
        if size == 0 {
            return Err(Error::invalid(
                "family bound needs at least one box with both sides occupied",
            ));
        }
        Ok(FamilyBound {
            groups: map.into_iter().map(|((s, l), c)| (s, l, c)).collect(),
            params,
            size,
        })
    }

    pub fn params(&self) -> &TailBoundParams {
        &self.params
    }

    /// |Θ₀| counted by the family.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn distinct_sizes(&self) -> usize {
        self.groups.len()
    }

    /// ln of the family bound at `y`, by log-sum-exp over groups in a fixed
    /// order.
    pub fn ln_bound(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return (2.0 * self.size as f64).ln();
        }
        let terms: Vec<f64> = self
            .groups
            .par_iter()
            .map(|&(s, l, c)| {
                (c as f64).ln() + ln_eta(y, s as f64, l as f64, (s + l) as f64, &self.params)
            })
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    pub fn bound(&self, y: f64) -> f64 {
        self.ln_bound(y).exp()
    }
}

/// Tolerance on the critical value.
pub const CRITICAL_VALUE_TOLERANCE: f64 = 1e-6;
const MAX_DOUBLINGS: usize = 200;

/// Smallest y (to [`CRITICAL_VALUE_TOLERANCE`]) with family bound ≤ α.
pub fn critical_value(family: &FamilyBound, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let target = alpha.ln();
    let mut hi = family.params.sigma2.sqrt();
    let mut doublings = 0;
    while family.ln_bound(hi) > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::NoCriticalValue {
                alpha,
                iterations: doublings,
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > CRITICAL_VALUE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if family.ln_bound(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    /// min(1, bound), never below the smallest positive f64.
    pub p: f64,
    /// log₁₀ of the uncapped-below bound, finite even where `p` underflows.
    pub log10: f64,
}

pub fn p_value_bound(statistic: f64, family: &FamilyBound) -> PValue {
    let ln = family.ln_bound(statistic).min(0.0);
    PValue {
        p: ln.exp().max(f64::MIN_POSITIVE),
        log10: ln / std::f64::consts::LN_10,
    }
}

/// (γ₀|W| / (4 ln(2|Θ₀|/α)))^{1/3}: the largest m for which the leading
/// exponential term still controls the family at level α.
pub fn admissible_m_bound(w: f64, theta_count: f64, gamma0: f64, alpha: f64) -> f64 {
    (gamma0 * w / (4.0 * (2.0 * theta_count / alpha).ln())).cbrt()
}
