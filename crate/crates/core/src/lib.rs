//! Spectral and pseudospectral analysis of the mode-restricted linearized
//! operators around the Oseen vortex.
//!
//! Everything is assembled as dense matrices on a half-line collocation grid
//! (see [`grid`]) and handed to LAPACK for eigenvalues and singular values.

pub mod acceptance;
pub mod config;
pub mod deform;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod ops;
pub mod output;
pub mod profiles;
pub mod quad;
pub mod semigroup;
pub mod spectral;
pub mod study;
pub mod waveop;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type CMat = ndarray::Array2<C64>;
/// Dense real matrix.
pub type RMat = ndarray::Array2<f64>;
