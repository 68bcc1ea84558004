//! Exact computations for the planar nearest-neighbour Ising model on
//! subdomains of the rotated square grid.

pub mod continuum;
pub mod correlators;
pub mod error;
pub mod kacward;
pub mod lattice;
pub mod opuc;
pub mod oracle;
pub mod pfaffian;
pub mod verify;

pub use error::{Error, Result};

/// Double precision antisymmetric matrix.
pub type Matrix = pfaffian::AntisymMatrix<f64>;
/// Single precision antisymmetric matrix.
pub type MatrixF32 = pfaffian::AntisymMatrix<f32>;
/// Double precision Pfaffian.
pub type Pf = pfaffian::Pfaffian<f64>;
