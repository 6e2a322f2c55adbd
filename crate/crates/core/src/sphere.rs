//! Directional geometry on the unit sphere S².

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest accepted deviation of the norm from one when building a unit vector
/// from raw coordinates.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Coordinates closer to zero than this are treated as lying on a folding
/// plane when canonicalising axis signs.
const SIGN_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// A point on S² (a direction). The norm is one to within 1e-12.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3([f64; 3]);

impl UnitVector3 {
    pub const E1: UnitVector3 = UnitVector3([1.0, 0.0, 0.0]);
    pub const E2: UnitVector3 = UnitVector3([0.0, 1.0, 0.0]);
    pub const E3: UnitVector3 = UnitVector3([0.0, 0.0, 1.0]);

    /// Accepts coordinates whose norm is within [`UNIT_TOLERANCE`] of one and
    /// renormalises them exactly.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!(
                "vector ({x}, {y}, {z}) has norm {norm}, expected 1"
            )));
        }
        Ok(UnitVector3([x / norm, y / norm, z / norm]))
    }

    /// Normalises any finite non-zero vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid(
                "cannot normalise a zero or non-finite vector",
            ));
        }
        Ok(UnitVector3([x / norm, y / norm, z / norm]))
    }

    pub(crate) fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        Self::normalize(v[0], v[1], v[2])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }
    pub fn coord(&self, axis: Axis) -> f64 {
        self.0[axis.index()]
    }
    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn neg(&self) -> UnitVector3 {
        UnitVector3([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Same vector with every coordinate replaced by its absolute value.
    pub fn abs(&self) -> [f64; 3] {
        [self.0[0].abs(), self.0[1].abs(), self.0[2].abs()]
    }

    /// Orthonormal pair completing `self` to a right-handed frame.
    pub fn orthonormal_frame(&self) -> ([f64; 3], [f64; 3]) {
        let [x, y, z] = self.0;
        // pick the coordinate axis least aligned with self
        let helper = if x.abs() <= y.abs() && x.abs() <= z.abs() {
            [1.0, 0.0, 0.0]
        } else if y.abs() <= z.abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let e1 = cross(self.0, helper);
        let n = norm(e1);
        let e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
        let e2 = cross(self.0, e1);
        (e1, e2)
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        UnitVector3::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(u: UnitVector3) -> Self {
        u.0
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Hausdorff dimension `d` and small-ball constant `c` with σ(B_δ) ~ c δ^d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub dim: usize,
    pub density_constant: f64,
}

impl ManifoldSpec {
    /// S²: a geodesic cap of radius δ has area 2π(1 − cos δ) ~ π δ².
    pub const SPHERE: ManifoldSpec = ManifoldSpec {
        dim: 2,
        density_constant: PI,
    };
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        ManifoldSpec::SPHERE
    }
}

/// Great-circle distance arccos⟨u, v⟩, in [0, π].
pub fn geodesic_distance(u: &UnitVector3, v: &UnitVector3) -> f64 {
    u.dot(v).clamp(-1.0, 1.0).acos()
}

/// Geodesic distance for raw coordinates; rejects inputs that are not unit
/// vectors.
pub fn geodesic_distance_checked(u: [f64; 3], v: [f64; 3]) -> Result<f64> {
    for w in [u, v] {
        if (norm(w) - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!("{w:?} is not a unit vector")));
        }
    }
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    Ok(dot.clamp(-1.0, 1.0).acos())
}

/// Distance between the lines spanned by u and v, arccos|⟨u, v⟩| in [0, π/2].
pub fn axial_distance(u: &UnitVector3, v: &UnitVector3) -> f64 {
    u.dot(v).abs().min(1.0).acos()
}

/// Reflects `u` into the closed hemisphere where the `axis` coordinate is
/// non-negative.
pub fn fold_to_hemisphere(u: &UnitVector3, axis: Axis) -> UnitVector3 {
    if u.coord(axis) >= 0.0 {
        *u
    } else {
        u.neg()
    }
}

/// Sign convention for axes: z ≥ 0, ties broken by x ≥ 0 and then y ≥ 0.
pub fn canonical_axis(u: &UnitVector3) -> UnitVector3 {
    for axis in [Axis::Z, Axis::X, Axis::Y] {
        let c = u.coord(axis);
        if c > SIGN_TIE {
            return *u;
        }
        if c < -SIGN_TIE {
            return u.neg();
        }
    }
    *u
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    UnitVector3([r * phi.cos(), r * phi.sin(), z])
}

/// Axially symmetric one-parameter concentration family around a preferred
/// axis.
///
/// Density with respect to surface measure, with t = ⟨u, axis⟩:
///
/// f(u; β) = β / (4π (1 + (β² − 1) t²)^{3/2})
///
/// β < 1 concentrates mass around ±axis, β = 1 is uniform, β > 1 concentrates
/// around the great circle orthogonal to the axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcgParams {
    pub preferred_axis: UnitVector3,
    pub beta: f64,
}

impl AcgParams {
    pub fn new(preferred_axis: UnitVector3, beta: f64) -> Result<Self> {
        let p = AcgParams {
            preferred_axis,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "concentration beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn density(&self, u: &UnitVector3) -> f64 {
        acg_axial_density(u.dot(&self.preferred_axis), self.beta)
    }
}

/// Density of the concentration family at axial coordinate `t`.
pub fn acg_axial_density(t: f64, beta: f64) -> f64 {
    let q = 1.0 + (beta * beta - 1.0) * t * t;
    beta / (4.0 * PI * q * q.sqrt())
}

pub fn sample_acg<R: Rng + ?Sized>(params: &AcgParams, rng: &mut R) -> Result<UnitVector3> {
    params.validate()?;
    let beta = params.beta;
    // inverse CDF of the axial coordinate: F(t) = (1 + β t / sqrt(1 + (β²−1) t²)) / 2
    let s: f64 = rng.random_range(-1.0..=1.0);
    let t = (s / (beta * beta + s * s * (1.0 - beta * beta)).sqrt()).clamp(-1.0, 1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - t * t).max(0.0).sqrt();
    let a = params.preferred_axis.as_array();
    let (e1, e2) = params.preferred_axis.orthonormal_frame();
    let (c, sn) = (phi.cos(), phi.sin());
    let v: [f64; 3] = std::array::from_fn(|k| t * a[k] + r * (c * e1[k] + sn * e2[k]));
    UnitVector3::normalize(v[0], v[1], v[2])
}

/// Weighted scatter matrix Σ wᵢ uᵢ uᵢᵀ.
pub fn scatter_matrix(samples: &[UnitVector3], weights: &[f64]) -> Result<Matrix3<f64>> {
    if samples.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} weights",
            samples.len(),
            weights.len()
        )));
    }
    let mut m = Matrix3::zeros();
    for (u, &w) in samples.iter().zip(weights) {
        if !(w >= 0.0) {
            return Err(Error::invalid(format!("negative weight {w}")));
        }
        let v = Vector3::from(u.as_array());
        m += w * v * v.transpose();
    }
    Ok(m)
}

/// Unit eigenvector of the largest eigenvalue of a symmetric 3×3 scatter
/// matrix, in canonical sign.
pub fn principal_axis_of_scatter(scatter: &Matrix3<f64>) -> Result<UnitVector3> {
    if scatter.trace() <= 0.0 || !scatter.trace().is_finite() {
        return Err(Error::EmptyCell);
    }
    let eig = SymmetricEigen::new(*scatter);
    let (imax, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &l)| {
                if l > best.1 {
                    (i, l)
                } else {
                    best
                }
            });
    let v = eig.eigenvectors.column(imax).into_owned();
    Ok(canonical_axis(&UnitVector3::from_vector(&v)?))
}

/// Principal axis of weighted directions (sign-invariant in each sample).
pub fn principal_axis(samples: &[UnitVector3], weights: &[f64]) -> Result<UnitVector3> {
    if samples.is_empty() || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::EmptyCell);
    }
    principal_axis_of_scatter(&scatter_matrix(samples, weights)?)
}
