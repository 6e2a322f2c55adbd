//! Exact entropies of known densities on S² by adaptive quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::UNIFORM_ENTROPY;
use crate::sphere::{acg_axial_density, AcgParams, UnitVector3};
use crate::{Error, Result};

/// Normalisation tolerance for densities handed to the quadrature.
pub const NORMALISATION_TOLERANCE: f64 = 1e-3;

/// Adaptive Simpson integration of `f` over [a, b]. The interval is first
/// split into 16 panels so narrow peaks are not missed.
pub(crate) fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            rec(f, x0, x1, f0, fm, f1, whole, tol / PANELS as f64, depth)
        })
        .sum()
}

fn neg_f_ln_f(f: f64) -> f64 {
    if f > 0.0 {
        -f * f.ln()
    } else {
        0.0
    }
}

/// Densities whose entropy is known by quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Uniform,
    Acg(AcgParams),
}

impl Density {
    pub fn eval(&self, u: &UnitVector3) -> f64 {
        match self {
            Density::Uniform => 1.0 / (4.0 * PI),
            Density::Acg(p) => p.density(u),
        }
    }
}

pub fn reference_entropy(density: &Density) -> Result<f64> {
    match density {
        Density::Uniform => Ok(UNIFORM_ENTROPY),
        Density::Acg(p) => {
            p.validate()?;
            acg_entropy(p.beta)
        }
    }
}

/// Entropy of the axially symmetric concentration family; reduces to a
/// one-dimensional integral in the axial coordinate t with dσ = 2π dt.
pub fn acg_entropy(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let mass = 2.0 * PI * adaptive_simpson(&|t| acg_axial_density(t, beta), -1.0, 1.0, 1e-12, 40);
    check_mass(mass)?;
    Ok(2.0
        * PI
        * adaptive_simpson(
            &|t| neg_f_ln_f(acg_axial_density(t, beta)),
            -1.0,
            1.0,
            1e-11,
            40,
        ))
}

fn check_mass(mass: f64) -> Result<()> {
    if (mass - 1.0).abs() > NORMALISATION_TOLERANCE {
        return Err(Error::invalid(format!(
            "density integrates to {mass}, not 1"
        )));
    }
    Ok(())
}

fn sphere_integral(g: &dyn Fn(&UnitVector3) -> f64, tol: f64) -> f64 {
    let outer = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let inner = |phi: f64| {
            let (sp, cp) = phi.sin_cos();
            match UnitVector3::normalize(st * cp, st * sp, ct) {
                Ok(u) => g(&u),
                Err(_) => 0.0,
            }
        };
        st * adaptive_simpson(&inner, 0.0, 2.0 * PI, tol, 30)
    };
    adaptive_simpson(&outer, 0.0, PI, tol, 30)
}

/// Entropy −∫ f ln f dσ of an arbitrary density on S² by nested adaptive
/// quadrature in spherical coordinates.
pub fn spherical_entropy(density: &dyn Fn(&UnitVector3) -> f64) -> Result<f64> {
    let mass = sphere_integral(density, 1e-9);
    check_mass(mass)?;
    Ok(sphere_integral(&|u| neg_f_ln_f(density(u)), 1e-8))
}
