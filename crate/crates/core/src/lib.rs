//! Numerics for lattice-point remainders of rotated convex bodies.
//!
//! The crate counts `Z^d` points in dilated rotated bodies exactly, evaluates
//! support-function geometry and Fourier asymptotics, runs the mollified
//! Poisson estimator with its curvature split, builds the determinant
//! witnesses used by the stationary-phase step, and exercises the Van der
//! Corput process on explicit exponential sums.

pub mod error;
pub mod detlab;
pub mod exponents;
pub mod expsum;
pub mod geometry;
pub mod harness;
pub mod jet;
pub mod fourier;
pub mod lattice;
pub mod poisson;
pub mod quadrature;

pub use error::{Error, Result};
pub use exponents::{ExponentTable, Omega};
pub use geometry::{ConvexBody, Rotation, SurfacePoint};
