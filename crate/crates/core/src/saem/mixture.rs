use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative diagonal floor added to covariance matrices: 1e-8 · trace / dim.
pub const COVARIANCE_FLOOR: f64 = 1e-8;

/// Mean and covariance of one Gaussian component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Two-component Gaussian mixture β φ(·; δ₁) + (1 − β) φ(·; δ₂).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub beta: f64,
    pub components: [Component; 2],
    /// Set when a covariance had to be regularised to become positive
    /// definite.
    pub regularized: bool,
}

impl MixtureParams {
    pub fn new(beta: f64, first: Component, second: Component) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid(format!(
                "mixture weight {beta} outside [0, 1]"
            )));
        }
        let d = first.mean.len();
        for c in [&first, &second] {
            if c.mean.len() != d || c.cov.nrows() != d || c.cov.ncols() != d || d == 0 {
                return Err(Error::invalid("component dimensions disagree"));
            }
        }
        let mut p = MixtureParams {
            beta,
            components: [first, second],
            regularized: false,
        };
        for c in &mut p.components {
            c.cov = symmetrize(&c.cov);
            if Cholesky::new(c.cov.clone()).is_none() {
                c.cov = floor_covariance(&c.cov);
                p.regularized = true;
            }
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    /// Same mixture with the component roles exchanged.
    pub fn swapped(&self) -> Self {
        let [a, b] = self.components.clone();
        MixtureParams {
            beta: 1.0 - self.beta,
            components: [b, a],
            regularized: self.regularized,
        }
    }

    pub(crate) fn prepare(&self) -> Result<[PreparedGaussian; 2]> {
        let a = PreparedGaussian::new(&self.components[0])?;
        let b = PreparedGaussian::new(&self.components[1])?;
        Ok([a, b])
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Adds 1e-8 · trace / dim to the diagonal (or an absolute 1e-12 for a zero
/// matrix).
pub(crate) fn floor_covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let eps = (COVARIANCE_FLOOR * m.trace() / d as f64).max(1e-12);
    let mut out = m.clone();
    for i in 0..d {
        out[(i, i)] += eps;
    }
    out
}

/// Gaussian density with cached Cholesky factor.
pub(crate) struct PreparedGaussian {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl PreparedGaussian {
    pub(crate) fn new(c: &Component) -> Result<Self> {
        let chol = Cholesky::new(c.cov.clone())
            .or_else(|| Cholesky::new(floor_covariance(&c.cov)))
            .ok_or_else(|| Error::invalid("covariance matrix is not positive definite"))?;
        let d = c.mean.len() as f64;
        let log_det: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|v| v.ln())
                .sum::<f64>();
        Ok(PreparedGaussian {
            mean: c.mean.clone(),
            chol,
            log_norm: -0.5 * (d * (2.0 * PI).ln() + log_det),
        })
    }

    pub(crate) fn ln_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

/// ln(β φ₁(x)) and ln((1 − β) φ₂(x)).
pub(crate) fn weighted_ln_densities(
    x: &DVector<f64>,
    beta: f64,
    g: &[PreparedGaussian; 2],
) -> (f64, f64) {
    (
        beta.ln() + g[0].ln_density(x),
        (1.0 - beta).ln() + g[1].ln_density(x),
    )
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn ln_mixture_density(x: &DVector<f64>, params: &MixtureParams) -> Result<f64> {
    let g = params.prepare()?;
    let (a, b) = weighted_ln_densities(x, params.beta, &g);
    Ok(ln_add_exp(a, b))
}

pub fn mixture_density(x: &DVector<f64>, params: &MixtureParams) -> Result<f64> {
    Ok(ln_mixture_density(x, params)?.exp())
}

/// Observed-data log-likelihood Σ ln φ_δ(x_l).
pub fn log_likelihood(data: &[DVector<f64>], params: &MixtureParams) -> Result<f64> {
    let g = params.prepare()?;
    Ok(data
        .iter()
        .map(|x| {
            let (a, b) = weighted_ln_densities(x, params.beta, &g);
            ln_add_exp(a, b)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn standard_gaussian_at_mode() {
        let c = Component {
            mean: DVector::zeros(2),
            cov: identity(2),
        };
        let p = MixtureParams::new(1.0, c.clone(), c).unwrap();
        let f = mixture_density(&DVector::zeros(2), &p).unwrap();
        assert!((f - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn singular_covariance_is_regularized() {
        let c = Component {
            mean: DVector::zeros(2),
            cov: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
        };
        let p = MixtureParams::new(0.5, c.clone(), c).unwrap();
        assert!(p.regularized);
        assert!(mixture_density(&DVector::zeros(2), &p).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_weight() {
        let c = Component {
            mean: DVector::zeros(1),
            cov: identity(1),
        };
        assert!(MixtureParams::new(1.5, c.clone(), c).is_err());
    }
}
