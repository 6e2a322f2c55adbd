use nalgebra::Matrix3;
use rayon::prelude::*;

use super::geometry::{clip_segment_to_box, sub};
use super::rsa::Fibre;
use crate::field::{flat_index, DirectionField, GridSpec};
use crate::sphere::principal_axis_of_scatter;
use crate::Result;

/// A cell is occupied when the centreline length inside it is at least this
/// fraction of the cell edge.
pub const OCCUPANCY_FRACTION: f64 = 0.5;

/// (flat cell index, centreline length) for every grid cell the fibre crosses.
fn fibre_pieces(f: &Fibre, grid: &GridSpec) -> Vec<(usize, f64)> {
    let delta = grid.cell_edge;
    let n = grid.cells;
    let len = f.length();
    let mut out = Vec::new();
    if len == 0.0 {
        return out;
    }
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for k in 0..3 {
        let a = f.p0[k].min(f.p1[k]) / delta;
        let b = f.p0[k].max(f.p1[k]) / delta;
        if b < 0.0 || a >= n[k] as f64 {
            return out;
        }
        lo[k] = a.floor().max(0.0) as usize;
        hi[k] = (b.floor() as usize).min(n[k] - 1);
    }
    for c2 in lo[2]..=hi[2] {
        for c1 in lo[1]..=hi[1] {
            for c0 in lo[0]..=hi[0] {
                let cell = [c0, c1, c2];
                let bmin = cell.map(|c| c as f64 * delta);
                let bmax = cell.map(|c| (c + 1) as f64 * delta);
                if let Some((t0, t1)) = clip_segment_to_box(f.p0, f.p1, bmin, bmax) {
                    let piece = (t1 - t0) * len;
                    if piece > 0.0 {
                        out.push((flat_index(n, cell), piece));
                    }
                }
            }
        }
    }
    out
}

/// Length-weighted principal axis of the fibre centrelines inside each
/// small cell of edge `grid.cell_edge`.
pub fn local_direction_field(fibres: &[Fibre], grid: &GridSpec) -> Result<DirectionField> {
    grid.validate()?;
    let total = grid.cell_count();
    let pieces: Vec<Vec<(usize, f64)>> = fibres.par_iter().map(|f| fibre_pieces(f, grid)).collect();

    let mut scatter = vec![Matrix3::<f64>::zeros(); total];
    let mut length = vec![0.0f64; total];
    for (f, cells) in fibres.iter().zip(&pieces) {
        if cells.is_empty() {
            continue;
        }
        let d = sub(f.p1, f.p0);
        let l = f.length();
        let u = nalgebra::Vector3::new(d[0] / l, d[1] / l, d[2] / l);
        let outer = u * u.transpose();
        for &(c, w) in cells {
            scatter[c] += w * outer;
            length[c] += w;
        }
    }

    let threshold = OCCUPANCY_FRACTION * grid.cell_edge;
    let directions = scatter
        .par_iter()
        .zip(length.par_iter())
        .map(|(s, &l)| {
            if l >= threshold {
                principal_axis_of_scatter(s).ok()
            } else {
                None
            }
        })
        .collect();
    DirectionField::from_cells(*grid, directions)
}
