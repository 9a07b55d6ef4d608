//! Plane-like minimizers for nonlocal phase-transition energies in periodic
//! media: lattice geometry, media, discretized energies, minimization and
//! numerical verification.

pub mod energy;
pub mod error;
pub mod geometry;
pub mod media;
pub mod minimize;
pub mod verify;

pub use error::{Error, Result};
