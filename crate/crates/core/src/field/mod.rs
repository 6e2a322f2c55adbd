//! Small-cell and scanning-window grids and the fields living on them.
//!
//! Indices are 0-based in memory with the first coordinate varying fastest.
//! File formats use 1-based indices.

mod window;

pub use window::{
    compute_mld, entropy_field, fold_attributes, partition_windows, EntropyFieldConfig,
    FoldedFields, WindowAggregate, WindowPartition, MIN_ENTROPY_MEMBERS,
};

use serde::{Deserialize, Serialize};

use crate::sphere::UnitVector3;
use crate::{Error, Result};

/// Flat offset of `idx` in a grid of shape `dims`.
#[inline]
pub fn flat_index(dims: [usize; 3], idx: [usize; 3]) -> usize {
    idx[0] + dims[0] * (idx[1] + dims[1] * idx[2])
}

/// Inverse of [`flat_index`].
#[inline]
pub fn unflatten(dims: [usize; 3], flat: usize) -> [usize; 3] {
    let i0 = flat % dims[0];
    let r = flat / dims[0];
    [i0, r % dims[1], r / dims[1]]
}

/// Small-cell edge Δ (voxels), cell counts n and window factor M.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cell_edge: f64,
    pub cells: [usize; 3],
    pub window: usize,
}

impl GridSpec {
    pub fn new(cell_edge: f64, cells: [usize; 3], window: usize) -> Result<Self> {
        let g = GridSpec {
            cell_edge,
            cells,
            window,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering a voxel domain with cells of edge `cell_edge`; a trailing
    /// partial cell is dropped on each axis.
    pub fn for_domain(domain: [f64; 3], cell_edge: f64, window: usize) -> Result<Self> {
        if !(cell_edge >= 1.0) {
            return Err(Error::invalid(format!(
                "cell edge must be >= 1, got {cell_edge}"
            )));
        }
        let cells = domain.map(|d| (d / cell_edge).floor().max(0.0) as usize);
        GridSpec::new(cell_edge, cells, window)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_edge >= 1.0) {
            return Err(Error::invalid(format!(
                "cell edge must be >= 1, got {}",
                self.cell_edge
            )));
        }
        if self.window < 1 {
            return Err(Error::invalid("window factor must be >= 1"));
        }
        Ok(())
    }

    /// Window counts m = floor(n / M).
    pub fn windows(&self) -> [usize; 3] {
        self.cells.map(|n| n / self.window)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn window_count(&self) -> usize {
        self.windows().iter().product()
    }
}

/// Scalar values on a 3D index grid with an occupancy mask. Unoccupied
/// entries hold 0 and are ignored by every consumer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField3 {
    dims: [usize; 3],
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalarField3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        let n = dims.iter().product();
        ScalarField3 {
            dims,
            values: vec![0.0; n],
            mask: vec![true; n],
        }
    }

    pub fn empty(dims: [usize; 3]) -> Self {
        let n = dims.iter().product();
        ScalarField3 {
            dims,
            values: vec![0.0; n],
            mask: vec![false; n],
        }
    }

    /// Fully occupied field.
    pub fn from_values(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::with_mask(dims, values, vec![true; n])
    }

    pub fn with_mask(dims: [usize; 3], mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if values.len() != n || mask.len() != n {
            return Err(Error::invalid(format!(
                "field of dims {dims:?} needs {n} entries, got {} values and {} mask flags",
                values.len(),
                mask.len()
            )));
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::invalid("field values must be finite"));
            }
        }
        Ok(ScalarField3 { dims, values, mask })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, idx: [usize; 3]) -> Option<f64> {
        if idx.iter().zip(&self.dims).any(|(i, n)| i >= n) {
            return None;
        }
        let f = flat_index(self.dims, idx);
        self.mask[f].then(|| self.values[f])
    }

    /// Stores a value and marks the entry occupied.
    pub fn set(&mut self, idx: [usize; 3], value: f64) {
        let f = flat_index(self.dims, idx);
        self.values[f] = value;
        self.mask[f] = true;
    }

    pub fn clear(&mut self, idx: [usize; 3]) {
        let f = flat_index(self.dims, idx);
        self.values[f] = 0.0;
        self.mask[f] = false;
    }

    pub fn occupied(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn iter_occupied(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let dims = self.dims;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(f, _)| (unflatten(dims, f), self.values[f]))
    }

    pub fn occupied_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn mean(&self) -> Option<f64> {
        let n = self.occupied();
        (n > 0).then(|| {
            self.values
                .iter()
                .zip(&self.mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .sum::<f64>()
                / n as f64
        })
    }

    /// Unbiased sample variance over occupied entries.
    pub fn sample_variance(&self) -> Option<f64> {
        let n = self.occupied();
        if n < 2 {
            return None;
        }
        let mean = self.mean()?;
        let ss: f64 = self
            .iter_occupied()
            .map(|(_, v)| (v - mean) * (v - mean))
            .sum();
        Some(ss / (n - 1) as f64)
    }

    /// Applies `f` to every occupied value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { 0.0 })
            .collect();
        ScalarField3 {
            dims: self.dims,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Sub-block with origin `start` and shape `dims`.
    pub fn crop(&self, start: [usize; 3], dims: [usize; 3]) -> Result<Self> {
        if (0..3).any(|k| start[k] + dims[k] > self.dims[k]) {
            return Err(Error::invalid("crop exceeds field bounds"));
        }
        let n: usize = dims.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let f = flat_index(self.dims, [start[0] + i, start[1] + j, start[2] + k]);
                    values.push(self.values[f]);
                    mask.push(self.mask[f]);
                }
            }
        }
        Ok(ScalarField3 { dims, values, mask })
    }
}

/// Principal directions on the small-cell grid; `None` marks cells without
/// enough fibre material.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionField {
    grid: GridSpec,
    directions: Vec<Option<UnitVector3>>,
}

impl DirectionField {
    pub fn empty(grid: GridSpec) -> Self {
        DirectionField {
            directions: vec![None; grid.cell_count()],
            grid,
        }
    }

    pub fn from_cells(grid: GridSpec, directions: Vec<Option<UnitVector3>>) -> Result<Self> {
        if directions.len() != grid.cell_count() {
            return Err(Error::invalid(format!(
                "grid has {} cells, got {} entries",
                grid.cell_count(),
                directions.len()
            )));
        }
        Ok(DirectionField { grid, directions })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.cells
    }

    pub fn get(&self, idx: [usize; 3]) -> Option<UnitVector3> {
        if idx.iter().zip(&self.grid.cells).any(|(i, n)| i >= n) {
            return None;
        }
        self.directions[flat_index(self.grid.cells, idx)]
    }

    pub fn set(&mut self, idx: [usize; 3], u: Option<UnitVector3>) {
        let f = flat_index(self.grid.cells, idx);
        self.directions[f] = u;
    }

    pub fn cells(&self) -> &[Option<UnitVector3>] {
        &self.directions
    }

    /// Number of occupied cells N = |J|.
    pub fn occupied(&self) -> usize {
        self.directions.iter().filter(|d| d.is_some()).count()
    }

    pub fn iter_occupied(&self) -> impl Iterator<Item = ([usize; 3], UnitVector3)> + '_ {
        let dims = self.grid.cells;
        self.directions
            .iter()
            .enumerate()
            .filter_map(move |(f, d)| d.map(|u| (unflatten(dims, f), u)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_round_trip() {
        let dims = [3, 4, 5];
        for f in 0..60 {
            assert_eq!(flat_index(dims, unflatten(dims, f)), f);
        }
        assert_eq!(flat_index(dims, [1, 0, 0]), 1);
        assert_eq!(flat_index(dims, [0, 1, 0]), 3);
    }

    #[test]
    fn masked_entries_are_zeroed_and_ignored() {
        let f = ScalarField3::with_mask([2, 1, 1], vec![5.0, 7.0], vec![true, false]).unwrap();
        assert_eq!(f.values(), &[5.0, 0.0]);
        assert_eq!(f.get([1, 0, 0]), None);
        assert_eq!(f.mean(), Some(5.0));
        assert_eq!(f.sample_variance(), None);
    }

    #[test]
    fn sample_variance_matches_hand_value() {
        let f = ScalarField3::from_values([4, 1, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((f.sample_variance().unwrap() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn window_counts() {
        let g = GridSpec::new(6.0, [83, 83, 83], 5).unwrap();
        assert_eq!(g.windows(), [16, 16, 16]);
        let g = GridSpec::for_domain([500.0; 3], 6.0, 5).unwrap();
        assert_eq!(g.cells, [83, 83, 83]);
    }
}
