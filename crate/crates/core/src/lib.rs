//! Nonlocal geometric functionals: fractional perimeters, mass at infinity,
//! fractional mean curvature, isoperimetric reports and discrete s-minimal sets.

pub mod error;
pub mod functionals;
pub mod geometry;
pub mod kernel;
pub mod plateau;
pub mod quadrature;
pub mod sum;

pub use error::{Error, Result};
pub use kernel::KernelParams;
