//! Synthetic ground truth: RSA fibre systems, per-cell local directions,
//! voxelisation and block-dependent Gaussian calibration fields.

mod direction;
mod gaussian;
pub mod geometry;
mod rsa;
mod voxel;

pub use direction::{local_direction_field, OCCUPANCY_FRACTION};
pub use gaussian::{generate_block_gaussian_field, inject_anomaly};
pub use geometry::{segment_distance, Point3};
pub use rsa::{generate_rsa, Fibre, LayerSpec, LayerTarget, RsaConfig, DEFAULT_MAX_ATTEMPTS};
pub use voxel::{voxelize, BinaryVolume};
