//! Focal submanifolds of isoparametric hypersurfaces in spheres.
//!
//! The crate builds the focal sets of OT-FKM families, the `g = 3` Cartan
//! families, the `(2,2)` Grassmann family and the `g = 2` great spheres,
//! computes their shape operators by finite differences, and evaluates the
//! curvature invariants that decide semiparallelity.

pub mod clifford;
pub mod division;
pub mod error;
pub mod families;
pub mod geometry;
pub mod invariants;
pub mod numkit;
pub mod report;

pub use error::{Error, Result};
