//! Smooth multi-degree rational splines and polar spline surfaces.

pub mod error;
pub mod io;
pub mod mdspline;
pub mod nurbs;
pub mod polar;
pub mod quadrics;
pub mod refinement;
pub mod sparse;

pub use error::{Result, SplineError};
