//! Caloric splitting for the 3D incompressible MHD system on a periodic box.
//!
//! The solution is written as a heat-flow part carrying the initial data plus
//! a finite-energy perturbation, found by a certified Picard contraction on a
//! Leray-mollified approximate system. The `verify` and `uniqueness` modules
//! audit the energy inequalities, a-priori bounds and stability estimates the
//! construction is supposed to satisfy.

pub mod calibration;
pub mod caloric;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod fixedpoint;
pub mod scheme;
pub mod spectral;
pub mod uniqueness;
pub mod verify;

pub use error::{Error, Result};
