use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flat_index, unflatten, DirectionField, ScalarField3};
use crate::entropy::{nn_entropy_penalized, Metric, NnConfig};
use crate::sphere::UnitVector3;
use crate::{Error, Result};

/// Windows with fewer members surviving the penalty filter are excluded from
/// the entropy field.
pub const MIN_ENTROPY_MEMBERS: usize = 8;

/// Occupied member cells S_l of every scanning window, windows indexed over
/// the window grid (first coordinate fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPartition {
    window_dims: [usize; 3],
    factor: usize,
    members: Vec<Vec<[usize; 3]>>,
}

impl WindowPartition {
    pub fn window_dims(&self) -> [usize; 3] {
        self.window_dims
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn members(&self, window: [usize; 3]) -> &[[usize; 3]] {
        &self.members[flat_index(self.window_dims, window)]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], &[[usize; 3]])> + '_ {
        let dims = self.window_dims;
        self.members
            .iter()
            .enumerate()
            .map(move |(f, m)| (unflatten(dims, f), m.as_slice()))
    }

    pub fn assigned(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

/// Assigns every occupied cell to the window ⌊i / M⌋; cells past the last
/// complete window are dropped.
pub fn partition_windows(field: &DirectionField) -> Result<WindowPartition> {
    let grid = field.grid();
    grid.validate()?;
    let m = grid.window;
    if grid.cells.iter().any(|&n| m > n) {
        return Err(Error::invalid(format!(
            "window factor {m} exceeds cell counts {:?}",
            grid.cells
        )));
    }
    let wd = grid.windows();
    let mut members = vec![Vec::new(); wd.iter().product()];
    for (idx, _) in field.iter_occupied() {
        let w = idx.map(|c| c / m);
        if (0..3).all(|k| w[k] < wd[k]) {
            members[flat_index(wd, w)].push(idx);
        }
    }
    Ok(WindowPartition {
        window_dims: wd,
        factor: m,
        members,
    })
}

/// Absolute direction coordinates x̃, ỹ, z̃ on the small-cell grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedFields {
    pub x: ScalarField3,
    pub y: ScalarField3,
    pub z: ScalarField3,
}

impl FoldedFields {
    pub fn get(&self, k: usize) -> &ScalarField3 {
        match k {
            0 => &self.x,
            1 => &self.y,
            _ => &self.z,
        }
    }
}

pub fn fold_attributes(field: &DirectionField) -> FoldedFields {
    let dims = field.dims();
    let mut out = [0, 1, 2].map(|_| ScalarField3::empty(dims));
    for (idx, u) in field.iter_occupied() {
        let a = u.abs();
        for k in 0..3 {
            out[k].set(idx, a[k]);
        }
    }
    let [x, y, z] = out;
    FoldedFields { x, y, z }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowAggregate {
    pub window: [usize; 3],
    pub count: usize,
    /// Coordinate-wise mean of |x|, |y|, |z| over the members.
    pub mld: [f64; 3],
    pub entropy: Option<f64>,
}

/// Mean local direction per non-empty window.
pub fn compute_mld(field: &DirectionField, windows: &WindowPartition) -> Vec<WindowAggregate> {
    windows
        .iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|(w, members)| {
            let mut s = [0.0; 3];
            let mut n = 0usize;
            for &i in members {
                if let Some(u) = field.get(i) {
                    let a = u.abs();
                    for k in 0..3 {
                        s[k] += a[k];
                    }
                    n += 1;
                }
            }
            WindowAggregate {
                window: w,
                count: n,
                mld: s.map(|v| v / n as f64),
                entropy: None,
            }
        })
        .filter(|a| a.count > 0)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyFieldConfig {
    pub nn: NnConfig,
    pub min_members: usize,
}

impl Default for EntropyFieldConfig {
    fn default() -> Self {
        EntropyFieldConfig {
            nn: NnConfig {
                metric: Metric::Axial,
                ..NnConfig::default()
            },
            min_members: MIN_ENTROPY_MEMBERS,
        }
    }
}

/// Penalised nearest-neighbour entropy of each window's member directions
/// on the window grid. Windows whose estimate is undefined or rests on fewer
/// than `min_members` filtered points are left unoccupied.
pub fn entropy_field(
    field: &DirectionField,
    windows: &WindowPartition,
    cfg: &EntropyFieldConfig,
) -> Result<ScalarField3> {
    let wd = windows.window_dims();
    let estimates: Vec<Option<f64>> = windows
        .members
        .par_iter()
        .map(|members| {
            let xs: Vec<UnitVector3> = members.iter().filter_map(|&i| field.get(i)).collect();
            if xs.len() < cfg.min_members.max(2) {
                return Ok(None);
            }
            match nn_entropy_penalized(&xs, &cfg.nn) {
                Ok(e) if e.filtered >= cfg.min_members => Ok(Some(e.value)),
                Ok(_) | Err(Error::DegenerateSample { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = ScalarField3::empty(wd);
    for (f, e) in estimates.into_iter().enumerate() {
        if let Some(v) = e {
            out.set(unflatten(wd, f), v);
        }
    }
    Ok(out)
}
