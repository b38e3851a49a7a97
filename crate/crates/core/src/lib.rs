//! Radial and spectral analysis of the fourth-order critical Paneitz
//! equation near isolated singularities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fit;
pub mod fowler;
pub mod interp;
pub mod invariants;
pub mod ode;
pub mod orbit;
pub mod params;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fowler::{FowlerState, Trajectory};
pub use orbit::{PeriodicOrbit, ShootOptions};
pub use params::{DimensionParams, HarmonicMode};
