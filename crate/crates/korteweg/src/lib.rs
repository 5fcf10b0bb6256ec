//! Pseudo-spectral mild-solution solver for the compressible Korteweg
//! (quantum Navier–Stokes) system on a periodic box, together with the
//! critical-norm toolkit used to certify its behavior: Littlewood–Paley /
//! Besov norms, caloric `bmo^-1`-type norms, exact Fourier evaluation of the
//! mixed hyperbolic–parabolic semigroup, and Picard fixed-point drivers with
//! contraction reporting.

pub mod cli;
pub mod error;
mod fft;
pub mod norms;
pub mod scenarios;
pub mod semigroup;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
