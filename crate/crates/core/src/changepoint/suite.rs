use serde::{Deserialize, Serialize};

use super::bound::{critical_value, p_value_bound, FamilyBound, TailBoundParams};
use super::prefix::BoxSums;
use super::scan::scan_statistic;
use super::theta::{enumerate_theta, BoxParam, ThetaGrid};
use crate::field::ScalarField3;
use crate::{Error, Result};

/// Box lattice and tail-bound constants for one attribute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeTest {
    pub theta: ThetaGrid,
    pub bound: TailBoundParams,
}

impl AttributeTest {
    /// Defaults for folded direction coordinates on the small-cell grid.
    pub fn directions() -> Self {
        AttributeTest {
            theta: ThetaGrid {
                offset: 8,
                step: 8,
                min_extent: 22,
                gamma0: 0.05,
                gamma1: 0.5,
            },
            bound: TailBoundParams {
                m: 5,
                sigma2: 0.2,
                m0: 0.5,
            },
        }
    }

    /// Defaults for the window entropy field.
    pub fn entropy() -> Self {
        AttributeTest {
            theta: ThetaGrid {
                offset: 2,
                step: 2,
                min_extent: 4,
                gamma0: 0.05,
                gamma1: 0.5,
            },
            bound: TailBoundParams::gaussian(1, 0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub attribute: String,
    pub statistic: f64,
    /// Signed inside-minus-outside mean difference at the maximiser.
    pub z: f64,
    pub argmax: BoxParam,
    pub y_alpha: f64,
    pub p_bound: f64,
    pub log10_p_bound: f64,
    pub reject: bool,
    /// Level the attribute was tested at (after any multiplicity correction).
    pub alpha: f64,
    pub sample_variance: Option<f64>,
    pub theta_count: usize,
    pub parameters: AttributeTest,
}

/// Scan test of one attribute field at level `alpha`.
pub fn run_test(
    attribute: &str,
    field: &ScalarField3,
    cfg: &AttributeTest,
    alpha: f64,
) -> Result<TestResult> {
    let sums = BoxSums::new(field);
    let thetas = enumerate_theta(&sums, &cfg.theta)?;
    if thetas.is_empty() {
        return Err(Error::invalid(format!(
            "attribute {attribute}: box lattice is empty for field dims {:?}",
            field.dims()
        )));
    }
    let scan = scan_statistic(&sums, &thetas)?;
    let family = FamilyBound::new(&thetas, cfg.bound)?;
    let y_alpha = critical_value(&family, alpha)?;
    let p = p_value_bound(scan.statistic, &family);
    Ok(TestResult {
        attribute: attribute.to_string(),
        statistic: scan.statistic,
        z: scan.z,
        argmax: scan.argmax,
        y_alpha,
        p_bound: p.p,
        log10_p_bound: p.log10,
        reject: scan.statistic >= y_alpha,
        alpha,
        sample_variance: field.sample_variance(),
        theta_count: family.len(),
        parameters: *cfg,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub alpha: f64,
    pub results: Vec<TestResult>,
    pub reject: bool,
}

/// Tests every attribute at the Bonferroni level α / (number of attributes);
/// the overall hypothesis is rejected when any attribute rejects.
pub fn run_suite(
    attributes: &[(&str, &ScalarField3, AttributeTest)],
    alpha: f64,
) -> Result<SuiteResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if attributes.is_empty() {
        return Err(Error::invalid("no attributes to test"));
    }
    let level = alpha / attributes.len() as f64;
    let results = attributes
        .iter()
        .map(|(name, field, cfg)| run_test(name, field, cfg, level))
        .collect::<Result<Vec<_>>>()?;
    let reject = results.iter().any(|r| r.reject);
    Ok(SuiteResult {
        alpha,
        results,
        reject,
    })
}

/// The four-hypothesis suite on x̃, ỹ, z̃ (small-cell grid) and Ê (window
/// grid).
#[allow(clippy::too_many_arguments)]
pub fn run_attribute_suite(
    x: &ScalarField3,
    y: &ScalarField3,
    z: &ScalarField3,
    entropy: &ScalarField3,
    directions: AttributeTest,
    entropy_cfg: AttributeTest,
    alpha: f64,
) -> Result<SuiteResult> {
    run_suite(
        &[
            ("x", x, directions),
            ("y", y, directions),
            ("z", z, directions),
            ("entropy", entropy, entropy_cfg),
        ],
        alpha,
    )
}
