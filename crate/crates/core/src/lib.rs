//! Reference numerics for the two-dimensional Ginzburg-Landau functional with a
//! sign-changing applied field: the Montgomery spectrum, one-dimensional
//! profiles, the half-plane strip energy and the leading-order energy on a domain.

pub mod domain;
pub mod error;
pub mod gl1d;
pub mod io;
pub mod grid;
pub mod linearized;
pub mod optimize;
pub mod spectral;
pub mod strip;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::Grid1D;
