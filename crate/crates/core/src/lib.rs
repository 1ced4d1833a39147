//! Steady heat conduction in a square ring with thin conducting inclusions,
//! solved with a boundary integral equation on the generalized Neumann kernel.

pub mod error;
pub mod cauchy;
pub mod config;
pub mod field;
pub mod fmm;
pub mod geometry;
pub mod gnk;
pub mod io;
pub mod krylov;
pub mod pipeline;
pub mod render;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
