//! Detection and localization of directional anomalies in 3D fibre systems.
//!
//! The crate is organised as a pipeline:
//!
//! * [`sphere`] directional geometry on the unit sphere,
//! * [`sim`] synthetic fibre systems and calibration fields,
//! * [`field`] small-cell / scanning-window bookkeeping,
//! * [`entropy`] directional entropy estimators,
//! * [`changepoint`] the scan statistic and its tail bounds for m-dependent fields,
//! * [`saem`] spatially smoothed SAEM clustering of window attributes,
//! * [`io`], [`config`], [`pipeline`] and [`report`] for orchestration.

pub mod changepoint;
pub mod config;
pub mod entropy;
mod error;
pub mod field;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod saem;
pub mod sim;
pub mod sphere;

pub use error::{Error, Result};
