use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{flat_index, ScalarField3};
use crate::{Error, Result};

/// Scale on which the dependence threshold is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceScale {
    /// ρ̂(h) / ρ̂(0).
    #[default]
    Correlation,
    Raw,
}

/// Empirical lag covariance with separate means over K and K + h:
///
/// ρ̂(h) = 1/(|K| − 1) Σ_{k∈K} (s_k − s̄₀)(s_{k+h} − s̄_h),
///
/// where K holds the indices k for which both k and k + h are occupied.
pub fn lag_covariance(field: &ScalarField3, h: [usize; 3]) -> Option<f64> {
    let d = field.dims();
    if (0..3).any(|k| h[k] >= d[k]) {
        return None;
    }
    let (vals, mask) = (field.values(), field.mask());
    let mut pairs = Vec::new();
    for k in 0..d[2] - h[2] {
        for j in 0..d[1] - h[1] {
            for i in 0..d[0] - h[0] {
                let a = flat_index(d, [i, j, k]);
                let b = flat_index(d, [i + h[0], j + h[1], k + h[2]]);
                if mask[a] && mask[b] {
                    pairs.push((vals[a], vals[b]));
                }
            }
        }
    }
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let m0 = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mh = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    Some(pairs.iter().map(|p| (p.0 - m0) * (p.1 - mh)).sum::<f64>() / (n - 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceEstimate {
    pub m: usize,
    /// ρ̂_max(i) for i = 1..=max_lag, on the chosen scale.
    pub shell_max: Vec<f64>,
    pub variance: f64,
}

/// ρ̂_max(i): the largest ρ̂(h) over lags with components in [1, i] and at
/// least one component equal to i.
pub fn shell_maxima(
    field: &ScalarField3,
    max_lag: usize,
    scale: CovarianceScale,
) -> Result<(Vec<f64>, f64)> {
    let var = lag_covariance(field, [0, 0, 0]).ok_or(Error::DegenerateField)?;
    if !(var > 0.0) {
        return Err(Error::DegenerateField);
    }
    let d = field.dims();
    if max_lag == 0 || d.iter().any(|&n| max_lag >= n) {
        return Err(Error::invalid(format!(
            "max lag {max_lag} must be in [1, min dims) for dims {d:?}"
        )));
    }
    let norm = match scale {
        CovarianceScale::Correlation => var,
        CovarianceScale::Raw => 1.0,
    };
    let mut lags = Vec::new();
    for i in 1..=max_lag {
        for a in 1..=i {
            for b in 1..=i {
                for c in 1..=i {
                    if a == i || b == i || c == i {
                        lags.push((i, [a, b, c]));
                    }
                }
            }
        }
    }
    let values: Vec<Option<f64>> = lags
        .par_iter()
        .map(|(_, h)| lag_covariance(field, *h))
        .collect();
    let mut shell = vec![f64::NEG_INFINITY; max_lag];
    for ((i, _), v) in lags.iter().zip(values) {
        if let Some(v) = v {
            shell[i - 1] = shell[i - 1].max(v / norm);
        }
    }
    Ok((shell, var))
}

/// Smallest m with ρ̂_max(i) ≤ ε₀ for every i in m..=max_lag.
pub fn estimate_m(
    field: &ScalarField3,
    eps0: f64,
    max_lag: usize,
    scale: CovarianceScale,
) -> Result<DependenceEstimate> {
    let (shell, variance) = shell_maxima(field, max_lag, scale)?;
    if shell[max_lag - 1] > eps0 {
        return Err(Error::EstimationFailed(format!(
            "covariance still above {eps0} at lag {max_lag}"
        )));
    }
    let mut m = max_lag;
    while m > 1 && shell[m - 2] <= eps0 {
        m -= 1;
    }
    Ok(DependenceEstimate {
        m,
        shell_max: shell,
        variance,
    })
}
