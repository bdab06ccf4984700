//! Numerical toolkit for rotational symmetry of ancient mean curvature flows
//! near neck-pinch and bowl-type singularities.

pub mod barrier;
pub mod convex;
pub mod error;
pub mod geometry;
pub mod heat_kernel;
pub mod improvement;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod rotation;
pub mod spectral;
pub mod sphere;

pub use error::{Error, Result};
