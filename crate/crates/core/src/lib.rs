//! Pseudospectral simulation of the stochastic Ericksen–Leslie system on the
//! three-torus, with energy, regularity and noise diagnostics.

pub mod bump;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod init;
pub mod local;
pub mod mollifier;
pub mod noise;
pub mod ou;
pub mod potential;
pub mod regularity;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::TorusGrid;
pub use mollifier::{Mollifier, MollifierKind, MollifierSpec};
pub use rustfft::num_complex::Complex64;
