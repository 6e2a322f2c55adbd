use rand::Rng;
use rand_distr::StandardNormal;

use crate::changepoint::BoxParam;
use crate::field::{flat_index, ScalarField3};
use crate::{Error, Result};

/// Field whose values are constant on m×m×m blocks anchored at multiples of
/// m, with independent standard normal block values. Blocks are drawn in
/// index order (first coordinate fastest).
pub fn generate_block_gaussian_field<R: Rng + ?Sized>(
    dims: [usize; 3],
    m: usize,
    rng: &mut R,
) -> Result<ScalarField3> {
    if m < 1 {
        return Err(Error::invalid("block size m must be >= 1"));
    }
    let blocks = dims.map(|n| n.div_ceil(m));
    let reps: Vec<f64> = (0..blocks.iter().product::<usize>())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut values = Vec::with_capacity(dims.iter().product());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                values.push(reps[flat_index(blocks, [i / m, j / m, k / m])]);
            }
        }
    }
    ScalarField3::from_values(dims, values)
}

/// Adds `h` to every occupied entry of the box.
pub fn inject_anomaly(field: &ScalarField3, b: &BoxParam, h: f64) -> Result<ScalarField3> {
    let dims = field.dims();
    if (0..3).any(|k| b.start[k] + b.extent[k] > dims[k]) {
        return Err(Error::invalid(format!(
            "box {:?}+{:?} exceeds field dims {dims:?}",
            b.start, b.extent
        )));
    }
    let mut out = field.clone();
    for k in b.start[2]..b.start[2] + b.extent[2] {
        for j in b.start[1]..b.start[1] + b.extent[1] {
            for i in b.start[0]..b.start[0] + b.extent[0] {
                if let Some(v) = field.get([i, j, k]) {
                    out.set([i, j, k], v + h);
                }
            }
        }
    }
    Ok(out)
}
