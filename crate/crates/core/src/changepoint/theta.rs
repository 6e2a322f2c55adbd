use serde::{Deserialize, Serialize};

use super::prefix::BoxSums;
use crate::{Error, Result};

/// Candidate anomaly box: cells `start + [0, extent)` (0-based), with cached
/// occupied counts inside and outside the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoxParam {
    pub start: [usize; 3],
    pub extent: [usize; 3],
    pub inside: usize,
    pub outside: usize,
}

impl BoxParam {
    pub fn new(start: [usize; 3], extent: [usize; 3]) -> Self {
        BoxParam {
            start,
            extent,
            inside: 0,
            outside: 0,
        }
    }

    /// Fills the occupied counts from box sums.
    pub fn with_counts(mut self, sums: &BoxSums) -> Self {
        self.inside = sums.box_count(&self);
        self.outside = sums.total_count() - self.inside;
        self
    }

    pub fn volume(&self) -> usize {
        self.extent.iter().product()
    }

    /// 1-based origin as used in exported files.
    pub fn origin(&self) -> [usize; 3] {
        self.start.map(|s| s + 1)
    }

    pub fn contains(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|k| idx[k] >= self.start[k] && idx[k] < self.start[k] + self.extent[k])
    }
}

/// Lattice of candidate boxes: origins at multiples of `offset` (Δ₀),
/// extents at positive multiples of `step` (Δ₁) no smaller than
/// `min_extent` cells (L_M), occupied volume fraction within [γ₀, γ₁] of the
/// whole grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub offset: usize,
    pub step: usize,
    pub min_extent: usize,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        if self.offset == 0 || self.step == 0 {
            return Err(Error::invalid("box lattice offsets must be >= 1"));
        }
        if !(self.gamma0 >= 0.0 && self.gamma1 <= 1.0) {
            return Err(Error::invalid(format!(
                "volume fractions must lie in [0, 1], got [{}, {}]",
                self.gamma0, self.gamma1
            )));
        }
        Ok(())
    }

    /// Smallest multiplier l with step·l ≥ min_extent.
    fn min_multiplier(&self) -> usize {
        self.min_extent.div_ceil(self.step).max(1)
    }
}

/// All boxes of the lattice that fit in the grid and satisfy the volume
/// constraint, in lexicographic (start, extent) order.
pub fn enumerate_theta(sums: &BoxSums, grid: &ThetaGrid) -> Result<Vec<BoxParam>> {
    grid.validate()?;
    let dims = sums.dims();
    let total_cells: usize = dims.iter().product();
    let total = sums.total_count();
    let lo = grid.gamma0 * total_cells as f64;
    let hi = grid.gamma1 * total_cells as f64;
    let lmin = grid.min_multiplier();

    let starts = |n: usize| (0..n).step_by(grid.offset);
    let extents = |n: usize, s: usize| {
        (lmin..)
            .map(|l| l * grid.step)
            .take_while(move |&e| s + e <= n)
    };
    let mut out = Vec::new();
    for s0 in starts(dims[0]) {
        for s1 in starts(dims[1]) {
            for s2 in starts(dims[2]) {
                for e0 in extents(dims[0], s0) {
                    for e1 in extents(dims[1], s1) {
                        for e2 in extents(dims[2], s2) {
                            let inside = sums.count([s0, s1, s2], [e0, e1, e2]);
                            let v = inside as f64;
                            if v >= lo && v <= hi {
                                out.push(BoxParam {
                                    start: [s0, s1, s2],
                                    extent: [e0, e1, e2],
                                    inside,
                                    outside: total - inside,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Result of matching |Θ₀| to a target count by choice of `min_extent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinExtentCalibration {
    pub min_extent: usize,
    pub count: usize,
    pub target: usize,
    /// count − target.
    pub residual: i64,
}

/// Picks the `min_extent` whose |Θ₀| is closest to `target` (smallest value
/// on ties), scanning 1..=max(dims).
pub fn calibrate_min_extent(
    sums: &BoxSums,
    grid: &ThetaGrid,
    target: usize,
) -> Result<MinExtentCalibration> {
    let max = *sums.dims().iter().max().unwrap_or(&0);
    let mut best: Option<MinExtentCalibration> = None;
    for l in 1..=max {
        let g = ThetaGrid {
            min_extent: l,
            ..*grid
        };
        let count = enumerate_theta(sums, &g)?.len();
        let residual = count as i64 - target as i64;
        if best.is_none_or(|b| residual.abs() < b.residual.abs()) {
            best = Some(MinExtentCalibration {
                min_extent: l,
                count,
                target,
                residual,
            });
        }
        if count == 0 {
            break;
        }
    }
    best.ok_or_else(|| Error::invalid("empty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField3;

    fn full(d: [usize; 3]) -> BoxSums {
        BoxSums::new(&ScalarField3::zeros(d))
    }

    fn grid(offset: usize, step: usize, min_extent: usize, g0: f64, g1: f64) -> ThetaGrid {
        ThetaGrid {
            offset,
            step,
            min_extent,
            gamma0: g0,
            gamma1: g1,
        }
    }

    #[test]
    fn known_lattice_counts() {
        assert_eq!(
            enumerate_theta(&full([16, 16, 17]), &grid(2, 2, 4, 0.05, 0.5))
                .unwrap()
                .len(),
            16536
        );
        assert_eq!(
            enumerate_theta(&full([12, 19, 16]), &grid(2, 2, 4, 0.05, 0.5))
                .unwrap()
                .len(),
            12366
        );
    }

    #[test]
    fn infeasible_fractions_give_empty_list() {
        assert!(enumerate_theta(&full([8, 8, 8]), &grid(1, 1, 1, 0.6, 0.4))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn lexicographic_order() {
        let t = enumerate_theta(&full([6, 6, 6]), &grid(1, 1, 1, 0.0, 1.0)).unwrap();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
}
