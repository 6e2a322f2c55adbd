use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prefix::BoxSums;
use super::BoxParam;
use crate::{Error, Result};

/// Difference between the occupied-cell means inside and outside the box.
pub fn z_statistic(sums: &BoxSums, theta: &BoxParam) -> Result<f64> {
    let n_in = sums.box_count(theta);
    let n_out = sums.total_count() - n_in;
    if n_in == 0 || n_out == 0 {
        return Err(Error::UndefinedStatistic(format!(
            "box {:?}+{:?} has {n_in} occupied cells inside and {n_out} outside",
            theta.start, theta.extent
        )));
    }
    let s_in = sums.box_sum(theta);
    let s_out = sums.total_sum() - s_in;
    Ok(s_in / n_in as f64 - s_out / n_out as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// T_W = max |Z(θ)|.
    pub statistic: f64,
    /// Signed Z at the maximiser.
    pub z: f64,
    pub argmax: BoxParam,
}

/// Maximal |Z(θ)| over the family; ties go to the first box in the given
/// order. Boxes with an empty side are skipped.
pub fn scan_statistic(sums: &BoxSums, thetas: &[BoxParam]) -> Result<ScanResult> {
    if thetas.is_empty() {
        return Err(Error::invalid("empty box family"));
    }
    let zs: Vec<Option<f64>> = thetas
        .par_iter()
        .map(|t| z_statistic(sums, t).ok())
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in zs.iter().enumerate() {
        if let Some(z) = *z {
            if best.is_none_or(|(_, b)| z.abs() > b.abs()) {
                best = Some((i, z));
            }
        }
    }
    let (i, z) = best.ok_or_else(|| {
        Error::UndefinedStatistic("no box has occupied cells on both sides".into())
    })?;
    Ok(ScanResult {
        statistic: z.abs(),
        z,
        argmax: thetas[i],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField3;

    #[test]
    fn constant_field_scores_zero() {
        let f = ScalarField3::from_values([4, 4, 4], vec![3.5; 64]).unwrap();
        let s = BoxSums::new(&f);
        let t = BoxParam::new([0, 0, 0], [2, 2, 2]);
        assert!(z_statistic(&s, &t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn empty_side_is_undefined() {
        let s = BoxSums::new(&ScalarField3::zeros([2, 2, 2]));
        assert!(z_statistic(&s, &BoxParam::new([0, 0, 0], [2, 2, 2])).is_err());
        assert!(scan_statistic(&s, &[]).is_err());
    }
}
