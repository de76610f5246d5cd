//! Numerical laboratory for the planar reduction of a length-minimization
//! problem in the Martinet-type sub-Riemannian structure
//! `P = x1^2 - x2^m`, `Q = 4 x1 P`.
//!
//! * [`structure`] — the fields `P`, `Q`, the singular candidate and lifts.
//! * [`geometry`] — robust polyline geometry: winding numbers, weighted
//!   areas, curvature and turning, self-intersections, reflection, level sets.
//! * [`extremal`] — integration of the extremal equations and diagnostics.
//! * [`shooting`] — the constrained two-point boundary problem.
//! * [`varcalc`] — sublevel-set minimizers, length expansion, regularity probe.

pub mod error;
pub mod extremal;
pub mod geometry;
pub mod numeric;
pub mod quadrature;
pub mod shooting;
pub mod structure;
pub mod varcalc;

pub use error::{Error, Result};
pub use extremal::{ExtremalParams, ExtremalTrajectory};
pub use geometry::Polyline;
pub use numeric::SignedLog;
pub use structure::{PlanarPoint, Precision, SpacePoint, StructureParams};
