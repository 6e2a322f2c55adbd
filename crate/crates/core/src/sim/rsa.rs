use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{norm_sq, segment_distance_sq, sub, Point3};
use crate::sphere::{sample_acg, AcgParams, Axis, UnitVector3};
use crate::{Error, Result};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Straight fibre with a spherocylinder (capsule) solid of the given radius
/// around the centreline [p0, p1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fibre {
    pub p0: Point3,
    pub p1: Point3,
    pub radius: f64,
}

impl Fibre {
    pub fn length(&self) -> f64 {
        norm_sq(sub(self.p1, self.p0)).sqrt()
    }

    pub fn midpoint(&self) -> Point3 {
        std::array::from_fn(|k| 0.5 * (self.p0[k] + self.p1[k]))
    }

    pub fn direction(&self) -> Result<UnitVector3> {
        let d = sub(self.p1, self.p0);
        UnitVector3::normalize(d[0], d[1], d[2])
    }

    /// Capsule volume πr²L + 4πr³/3.
    pub fn volume(&self) -> f64 {
        capsule_volume(self.length(), self.radius)
    }
}

fn capsule_volume(length: f64, radius: f64) -> f64 {
    PI * radius * radius * length + 4.0 / 3.0 * PI * radius.powi(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerTarget {
    Count(usize),
    /// Fraction of the slab volume covered by fibre solids.
    VolumeFraction(f64),
}

/// Slab `[lo, hi)` along the configuration's slab axis with its own
/// direction distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub lo: f64,
    pub hi: f64,
    pub directions: AcgParams,
    pub target: LayerTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsaConfig {
    /// Domain extent in voxels; the domain is [0, dims].
    pub dims: [f64; 3],
    pub length: f64,
    pub radius: f64,
    pub slab_axis: Axis,
    pub layers: Vec<LayerSpec>,
    pub max_attempts: usize,
    pub seed: u64,
}

impl RsaConfig {
    /// Single layer filling the whole domain.
    pub fn homogeneous(
        dims: [f64; 3],
        length: f64,
        radius: f64,
        directions: AcgParams,
        target: LayerTarget,
        seed: u64,
    ) -> Self {
        RsaConfig {
            dims,
            length,
            radius,
            slab_axis: Axis::Z,
            layers: vec![LayerSpec {
                lo: 0.0,
                hi: dims[2],
                directions,
                target,
            }],
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            seed,
        }
    }

    /// Three equal slabs along z: outer slabs share `outer`, the middle one
    /// uses `middle`.
    pub fn three_layers(
        dims: [f64; 3],
        length: f64,
        radius: f64,
        outer: AcgParams,
        middle: AcgParams,
        target: LayerTarget,
        seed: u64,
    ) -> Self {
        let z = dims[2];
        let cuts = [0.0, (z / 3.0).round(), (2.0 * z / 3.0).round(), z];
        let layers = (0..3)
            .map(|i| LayerSpec {
                lo: cuts[i],
                hi: cuts[i + 1],
                directions: if i == 1 { middle } else { outer },
                target,
            })
            .collect();
        RsaConfig {
            dims,
            length,
            radius,
            slab_axis: Axis::Z,
            layers,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::invalid("domain dims must be positive"));
        }
        if !(self.length > 0.0) || !(self.radius > 0.0) {
            return Err(Error::invalid("fibre length and radius must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be positive"));
        }
        let extent = self.dims[self.slab_axis.index()];
        let mut edge = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.directions.validate()?;
            if layer.lo != edge || !(layer.hi > layer.lo) {
                return Err(Error::invalid(format!(
                    "layer {i} [{}, {}) does not continue the partition at {edge}",
                    layer.lo, layer.hi
                )));
            }
            if let LayerTarget::VolumeFraction(f) = layer.target {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::invalid(format!(
                        "volume fraction {f} outside [0, 1)"
                    )));
                }
            }
            edge = layer.hi;
        }
        if !self.layers.is_empty() && edge != extent {
            return Err(Error::invalid(format!(
                "layers end at {edge}, domain extent is {extent}"
            )));
        }
        Ok(())
    }

    pub fn target_count(&self, layer: &LayerSpec) -> usize {
        match layer.target {
            LayerTarget::Count(n) => n,
            LayerTarget::VolumeFraction(f) => {
                let a = self.slab_axis.index();
                let slab: f64 = (0..3)
                    .map(|k| {
                        if k == a {
                            layer.hi - layer.lo
                        } else {
                            self.dims[k]
                        }
                    })
                    .product();
                (f * slab / capsule_volume(self.length, self.radius)).round() as usize
            }
        }
    }
}

/// Dense bucket grid over the domain. Each fibre is registered in every
/// cell met by its bounds grown by r; two capsules can only touch when those
/// grown bounds overlap, so they then share a cell.
struct SpatialHash {
    cell: f64,
    n: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

impl SpatialHash {
    fn new(dims: [f64; 3], cell: f64) -> Self {
        let n = dims.map(|d| ((d / cell).ceil() as usize).max(1));
        SpatialHash {
            cell,
            n,
            buckets: vec![Vec::new(); n[0] * n[1] * n[2]],
        }
    }

    fn cells(&self, b: &[Point3; 2]) -> impl Iterator<Item = usize> + '_ {
        let lo: [usize; 3] = std::array::from_fn(|k| {
            ((b[0][k] / self.cell).floor().max(0.0) as usize).min(self.n[k] - 1)
        });
        let hi: [usize; 3] = std::array::from_fn(|k| {
            ((b[1][k] / self.cell).floor().max(0.0) as usize).min(self.n[k] - 1)
        });
        let n = self.n;
        (lo[2]..=hi[2]).flat_map(move |z| {
            (lo[1]..=hi[1])
                .flat_map(move |y| (lo[0]..=hi[0]).map(move |x| x + n[0] * (y + n[1] * z)))
        })
    }

    fn insert(&mut self, b: &[Point3; 2], id: usize) {
        let cells: Vec<usize> = self.cells(b).collect();
        for c in cells {
            self.buckets[c].push(id as u32);
        }
    }

    fn candidates<'a>(&'a self, b: &'a [Point3; 2]) -> impl Iterator<Item = usize> + 'a {
        self.cells(b)
            .flat_map(move |c| self.buckets[c].iter().map(|&i| i as usize))
    }
}

/// Axis-aligned bounds `[min, max]` of a segment, grown by `pad`.
fn segment_bounds(p0: Point3, p1: Point3, pad: f64) -> [Point3; 2] {
    [
        std::array::from_fn(|k| p0[k].min(p1[k]) - pad),
        std::array::from_fn(|k| p0[k].max(p1[k]) + pad),
    ]
}

fn bounds_overlap(a: &[Point3; 2], b: &[Point3; 2]) -> bool {
    (0..3).all(|k| a[0][k] <= b[1][k] && b[0][k] <= a[1][k])
}

/// Random sequential adsorption of non-overlapping capsules, layer by layer.
///
/// Each candidate gets a centre uniform in its slab and a direction from the
/// layer distribution; it is rejected if it leaves the domain or comes closer
/// than 2r to an accepted fibre.
pub fn generate_rsa<R: Rng + ?Sized>(config: &RsaConfig, rng: &mut R) -> Result<Vec<Fibre>> {
    config.validate()?;
    let (len, r) = (config.length, config.radius);
    let a = config.slab_axis.index();
    let min_dist_sq = 4.0 * r * r;
    let mut hash = SpatialHash::new(config.dims, (0.25 * len).max(4.0 * r));
    let mut fibres = Vec::new();
    let mut bounds: Vec<[Point3; 2]> = Vec::new();

    for (li, layer) in config.layers.iter().enumerate() {
        let target = config.target_count(layer);
        let mut placed = 0;
        let mut tried = 0usize;
        while placed < target {
            let mut accepted = None;
            for _ in 0..config.max_attempts {
                tried += 1;
                let centre: Point3 = std::array::from_fn(|k| {
                    if k == a {
                        rng.random_range(layer.lo..layer.hi)
                    } else {
                        rng.random_range(0.0..config.dims[k])
                    }
                });
                let u = sample_acg(&layer.directions, rng)?.as_array();
                let p0: Point3 = std::array::from_fn(|k| centre[k] - 0.5 * len * u[k]);
                let p1: Point3 = std::array::from_fn(|k| centre[k] + 0.5 * len * u[k]);
                let inside = (0..3).all(|k| {
                    let (lo, hi) = (p0[k].min(p1[k]), p0[k].max(p1[k]));
                    lo >= r && hi <= config.dims[k] - r
                });
                if !inside {
                    continue;
                }
                let b = segment_bounds(p0, p1, r);
                let clash = hash.candidates(&b).any(|j| {
                    let f: &Fibre = &fibres[j];
                    bounds_overlap(&b, &bounds[j])
                        && segment_distance_sq(p0, p1, f.p0, f.p1) < min_dist_sq
                });
                if !clash {
                    accepted = Some(Fibre { p0, p1, radius: r });
                    break;
                }
            }
            match accepted {
                Some(f) => {
                    let b = segment_bounds(f.p0, f.p1, r);
                    hash.insert(&b, fibres.len());
                    bounds.push(b);
                    fibres.push(f);
                    placed += 1;
                }
                None => {
                    return Err(Error::PartialPacking {
                        layer: li,
                        achieved: placed,
                        target,
                    })
                }
            }
        }
        log::debug!("layer {li}: placed {placed} fibres in {tried} attempts");
    }
    Ok(fibres)
}
