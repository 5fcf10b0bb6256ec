//! Periodic grid, Fourier representation, fractional Laplacian multipliers,
//! Leray projections and Littlewood–Paley blocks.
//!
//! Everything here is a pure function on immutable values; fields can be
//! shared freely across threads.

mod dyadic;
mod field;
mod grid;

pub use dyadic::DyadicDecomposition;
pub use field::SpectralField;
pub use grid::TorusGrid;
