//! Birkhoff regularity, spectra and Green's functions of two-point boundary
//! value problems `D^n y + sum p_k D^k y = lambda y` on [0, 1], `D = -i d/dx`.

pub mod error;
pub mod fss;
pub mod analysis;
pub mod config;
pub mod greens;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod problem;
pub mod quadrature;
pub mod regularity;
pub mod spectrum;

pub use error::{BvpError, Result};
pub use num_complex::Complex64;
