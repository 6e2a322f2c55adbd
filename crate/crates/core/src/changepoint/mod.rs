//! Scan test for a box-shaped change in mean of an m-dependent random field.
//!
//! For every candidate box θ the statistic Z(θ) is the difference between
//! the mean inside and outside the box; T_W = max |Z(θ)|. Critical values and
//! p-values come from an exponential tail bound for sums of m-dependent
//! variables, summed over the family of boxes.

mod bound;
mod covariance;
mod prefix;
mod scan;
mod suite;
mod theta;

pub use bound::{
    admissible_m_bound, critical_value, eta_tail_bound, p_value_bound, FamilyBound, PValue,
    TailBoundParams, CRITICAL_VALUE_TOLERANCE,
};
pub use covariance::{
    estimate_m, lag_covariance, shell_maxima, CovarianceScale, DependenceEstimate,
};
pub use prefix::BoxSums;
pub use scan::{scan_statistic, z_statistic, ScanResult};
pub use suite::{run_attribute_suite, run_suite, run_test, AttributeTest, SuiteResult, TestResult};
pub use theta::{calibrate_min_extent, enumerate_theta, BoxParam, MinExtentCalibration, ThetaGrid};
