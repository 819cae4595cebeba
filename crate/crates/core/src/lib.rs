//! Zipper entanglement renormalization (ZER) for translation-invariant
//! free-fermion ground states on a ring.
//!
//! Every renormalization step inspects a small region of the current state,
//! separates frozen (nearly filled or nearly empty) modes from the courier
//! modes that carry longer-range entanglement, rotates the state into a
//! quasi-local Wannier basis, drops the frozen part, and blocks the courier
//! modes into a coarser lattice. All of it is done at the level of the
//! single-particle correlation matrix `C_{ij} = <c_i^dag c_j>`.
//!
//! Module map:
//!
//! * [`model`]: tight-binding models and their ground-state correlations.
//! * [`gaussian`]: restrictions, entanglement spectra and basis rotations.
//! * [`distiller`]: local and global distiller Hamiltonians, band classification.
//! * [`wannier`]: band projectors and projected-position Wannier bases.
//! * [`zipper`]: zipper unitary, factorization residuals, rounding and blocking.
//! * [`bounds`]: entanglement bound for the frozen/courier cut.
//! * [`rg`]: the renormalization loop and its reconstructions.
//! * [`cli`]: run configuration, presets and artifact emission.

pub mod bounds;
pub mod cli;
pub mod distiller;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod rg;
pub mod wannier;
pub mod zipper;

pub use error::{Error, Result};
pub use faer::c64;
pub use gaussian::CorrelationMatrix;
pub use model::ModelSpec;
pub use rg::{run_zer, EpsilonClock, RGConfig, RGTrace};

#[cfg(test)]
pub(crate) mod testutil;
