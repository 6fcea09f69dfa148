//! Planar embedding of curved-surface strips by in-plane strain-energy
//! minimization.
//!
//! The library takes a parametric surface, cuts it into narrow strips along
//! its coordinates, and computes for each strip the flat shape whose induced
//! metric is as close as possible to the surface metric. The flat shapes can
//! be exported as SVG cutting patterns and woven back into the surface.
//!
//! Pipeline: [`surface`] defines and differentiates the parametrization,
//! [`geometry`] derives metric/curvature data, [`initial_state`] builds a
//! curvature-matched seed, [`solver`] runs the Galerkin/Newton minimization
//! on a [`bspline`] manifold, [`analysis`] provides closed-form strain
//! predictions and validation statistics, and [`export`] writes SVG/CSV.

pub mod analysis;
pub mod bspline;
pub mod elasticity;
pub mod error;
pub mod export;
pub mod geometry;
pub mod initial_state;
pub mod quadrature;
pub mod solver;
pub mod surface;

pub use error::{Error, Result};
