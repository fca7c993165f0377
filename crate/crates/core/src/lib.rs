//! Meshfree generalized finite differences on point-cloud manifolds.
//!
//! Differential operators are built per point by weighted least squares in
//! the local tangent plane, assembled into sparse matrices and advanced in
//! time with implicit integrators.

pub mod advection;
pub mod discretization;
pub mod error;
pub mod frames;
pub mod highdim;
pub mod io;
pub mod pointcloud;
pub mod problems;
pub mod projection;
pub mod sparse;
pub mod stencils;
pub mod surface;
pub mod timeint;

pub use discretization::{Discretization, DiscretizationOptions};
pub use error::{GfdmError, Result};
pub use pointcloud::{build_neighborhoods, NeighborStrategy, Neighborhood, PointCloud};
pub use surface::Surface;
