//! Spectral analysis of the discrete two-particle Schroedinger operator on Z^3:
//! the free dispersion and its band geometry, grid discretizations of H(k), V and
//! the Birman-Schwinger operator, eigenvalue counting and the associated theorem
//! checks.

pub mod analysis;
pub mod cli;
pub mod dispersion;
pub mod eigen;
pub mod error;
pub mod model;
pub mod operators;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{MassPair, MomentumGrid, Potential, Quasimomentum, RelativeMomentum};
