use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Homogeneous,
    Anomaly,
}

/// The heavier component is homogeneous material: with β̂ ≥ ½ a window is
/// homogeneous when q_l ≥ ½, otherwise the roles of the components swap.
pub fn classify(q: &[f64], beta_hat: f64) -> Vec<Label> {
    q.iter()
        .map(|&ql| {
            let first = ql >= 0.5;
            if first == (beta_hat >= 0.5) {
                Label::Homogeneous
            } else {
                Label::Anomaly
            }
        })
        .collect()
}

/// Flags values outside mean ± 3 sample standard deviations.
pub fn three_sigma_baseline(values: &[f64]) -> Result<Vec<bool>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid("3-sigma rule needs at least two values"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(vec![false; n]);
    }
    Ok(values.iter().map(|v| (v - mean).abs() > 3.0 * sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_swap() {
        assert_eq!(classify(&[0.9], 0.8), vec![Label::Homogeneous]);
        assert_eq!(classify(&[0.1], 0.8), vec![Label::Anomaly]);
        assert_eq!(classify(&[0.1], 0.3), vec![Label::Homogeneous]);
        assert_eq!(classify(&[0.9], 0.3), vec![Label::Anomaly]);
    }

    #[test]
    fn constant_sample_has_no_flags() {
        assert_eq!(three_sigma_baseline(&[2.0; 5]).unwrap(), vec![false; 5]);
        assert!(three_sigma_baseline(&[1.0]).is_err());
    }
}
