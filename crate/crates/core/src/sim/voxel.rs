use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::point_segment_distance_sq;
use super::rsa::Fibre;
use crate::field::flat_index;

/// Binary volume, first index fastest; 1 marks fibre material.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryVolume {
    pub dims: [usize; 3],
    pub data: Vec<u8>,
}

impl BinaryVolume {
    pub fn get(&self, idx: [usize; 3]) -> u8 {
        self.data[flat_index(self.dims, idx)]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }
}

/// Marks every voxel whose centre (index + 0.5) lies within the fibre radius
/// of some centreline.
pub fn voxelize(fibres: &[Fibre], dims: [usize; 3]) -> BinaryVolume {
    let plane = dims[0] * dims[1];
    let mut data = vec![0u8; plane * dims[2]];
    if plane == 0 {
        return BinaryVolume { dims, data };
    }
    // bucket fibres by the z-slices they can touch, then fill slices in parallel
    let mut by_slice: Vec<Vec<usize>> = vec![Vec::new(); dims[2]];
    for (i, f) in fibres.iter().enumerate() {
        let lo = (f.p0[2].min(f.p1[2]) - f.radius - 0.5).floor().max(0.0) as usize;
        let hi = (f.p0[2].max(f.p1[2]) + f.radius - 0.5).ceil();
        if hi < 0.0 {
            continue;
        }
        for s in by_slice
            .iter_mut()
            .take((hi as usize + 1).min(dims[2]))
            .skip(lo)
        {
            s.push(i);
        }
    }
    data.par_chunks_mut(plane)
        .enumerate()
        .for_each(|(k, slice)| {
            let z = k as f64 + 0.5;
            for &fi in &by_slice[k] {
                let f = &fibres[fi];
                let r2 = f.radius * f.radius;
                let range = |c: usize| {
                    let lo = (f.p0[c].min(f.p1[c]) - f.radius - 0.5).floor().max(0.0) as usize;
                    let hi = ((f.p0[c].max(f.p1[c]) + f.radius - 0.5).ceil().max(0.0) as usize)
                        .min(dims[c].saturating_sub(1));
                    lo..=hi
                };
                for j in range(1) {
                    for i in range(0) {
                        let p = [i as f64 + 0.5, j as f64 + 0.5, z];
                        if point_segment_distance_sq(p, f.p0, f.p1) <= r2 {
                            slice[i + dims[0] * j] = 1;
                        }
                    }
                }
            }
        });
    BinaryVolume { dims, data }
}
