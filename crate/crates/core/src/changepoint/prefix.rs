use crate::field::ScalarField3;

use super::BoxParam;

/// Summed-area tables of values and occupancy for O(1) box queries.
#[derive(Clone, Debug)]
pub struct BoxSums {
    dims: [usize; 3],
    sums: Vec<f64>,
    counts: Vec<u32>,
}

impl BoxSums {
    pub fn new(field: &ScalarField3) -> Self {
        let d = field.dims();
        let p = [d[0] + 1, d[1] + 1, d[2] + 1];
        let mut sums = vec![0.0; p[0] * p[1] * p[2]];
        let mut counts = vec![0u32; sums.len()];
        let at = |i: usize, j: usize, k: usize| i + p[0] * (j + p[1] * k);
        let (vals, mask) = (field.values(), field.mask());
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let f = i + d[0] * (j + d[1] * k);
                    let (v, c) = if mask[f] { (vals[f], 1) } else { (0.0, 0) };
                    let (a, b, cc) = (i + 1, j + 1, k + 1);
                    sums[at(a, b, cc)] = v
                        + sums[at(a - 1, b, cc)]
                        + sums[at(a, b - 1, cc)]
                        + sums[at(a, b, cc - 1)]
                        - sums[at(a - 1, b - 1, cc)]
                        - sums[at(a - 1, b, cc - 1)]
                        - sums[at(a, b - 1, cc - 1)]
                        + sums[at(a - 1, b - 1, cc - 1)];
                    counts[at(a, b, cc)] = c
                        + counts[at(a - 1, b, cc)]
                        + counts[at(a, b - 1, cc)]
                        + counts[at(a, b, cc - 1)]
                        + counts[at(a - 1, b - 1, cc - 1)]
                        - counts[at(a - 1, b - 1, cc)]
                        - counts[at(a - 1, b, cc - 1)]
                        - counts[at(a, b - 1, cc - 1)];
                }
            }
        }
        BoxSums {
            dims: d,
            sums,
            counts,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn at(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.dims[0] + 1) * (j + (self.dims[1] + 1) * k)
    }

    /// Sum of occupied values in the box `start + [0, extent)`.
    pub fn sum(&self, start: [usize; 3], extent: [usize; 3]) -> f64 {
        let [a0, b0, c0] = start;
        let [a1, b1, c1] = [a0 + extent[0], b0 + extent[1], c0 + extent[2]];
        let s = &self.sums;
        s[self.at(a1, b1, c1)]
            - s[self.at(a0, b1, c1)]
            - s[self.at(a1, b0, c1)]
            - s[self.at(a1, b1, c0)]
            + s[self.at(a0, b0, c1)]
            + s[self.at(a0, b1, c0)]
            + s[self.at(a1, b0, c0)]
            - s[self.at(a0, b0, c0)]
    }

    /// Number of occupied cells in the box.
    pub fn count(&self, start: [usize; 3], extent: [usize; 3]) -> usize {
        let [a0, b0, c0] = start;
        let [a1, b1, c1] = [a0 + extent[0], b0 + extent[1], c0 + extent[2]];
        let c = &self.counts;
        let pos = c[self.at(a1, b1, c1)] as i64
            + c[self.at(a0, b0, c1)] as i64
            + c[self.at(a0, b1, c0)] as i64
            + c[self.at(a1, b0, c0)] as i64;
        let neg = c[self.at(a0, b1, c1)] as i64
            + c[self.at(a1, b0, c1)] as i64
            + c[self.at(a1, b1, c0)] as i64
            + c[self.at(a0, b0, c0)] as i64;
        (pos - neg) as usize
    }

    pub fn box_sum(&self, b: &BoxParam) -> f64 {
        self.sum(b.start, b.extent)
    }

    pub fn box_count(&self, b: &BoxParam) -> usize {
        self.count(b.start, b.extent)
    }

    pub fn total_sum(&self) -> f64 {
        self.sum([0; 3], self.dims)
    }

    pub fn total_count(&self) -> usize {
        self.count([0; 3], self.dims)
    }
}
