//! Voxel-phantom kernels for coupled light and heat transport in layered tissue.
//!
//! Everything here is allocation-only (`alloc`) and free of IO so it can run on
//! any target. File formats, configuration and the command-line driver live in
//! the `pbmsim` crate.
//!
//! Internal quantities are SI (m, s, kg, W, °C). Result fields are reported in
//! the units clinicians read them in (mW/cm², °C, J/cm³); see [`units`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bioheat;
pub mod diffusion;
pub mod dosimetry;
pub mod error;
pub mod field;
pub mod geometry;
pub mod math;
pub mod mc;
pub mod phantom;
pub mod solver;
pub mod sources;
pub mod units;

pub use error::{Error, Result};
pub use field::{Grid, Quantity, ScalarField};
pub use geometry::Face;
pub use phantom::{Material, MaterialId, MaterialLibrary, VoxelPhantom};
