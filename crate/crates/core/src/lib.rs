//! Numerical laboratory for self-expanding solutions of mean curvature flow.
//!
//! Surfaces are triangle meshes that minimize the weighted area
//! ∫ e^{|p|²/4} dA under a finite symmetry group; diagnostics verify the
//! integral identities and classifications that such expanders satisfy.

pub mod boundary;
pub mod cli;
pub mod csf;
pub mod diagnostics;
pub mod error;
pub mod foliation;
pub mod linalg;
pub mod mesh;
pub mod pipeline;
pub mod model;
pub mod solver;
pub mod spatial;
pub mod symmetry;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
