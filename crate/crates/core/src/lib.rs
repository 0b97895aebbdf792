//! Numerical laboratory for the projective-dual CR geometry of circular
//! strongly convex hypersurfaces in C².
//!
//! Everything is computed pointwise on jets: the dual map, the frame fields,
//! third-order tangential operators and the membership tests built on them.

pub mod jets;
pub mod quadrature;
pub mod surfaces;
pub mod dualframe;
pub mod operators;
pub mod calculus;
pub mod characterize;
pub mod config;
pub mod certify;

pub use jets::{Jet, JetError, JetSettings, Wirtinger};
pub use surfaces::{CircularSurface, Point, SurfaceError};
