//! Planar curve geometry.

pub mod area;
pub mod curvature;
pub mod intersect;
pub mod io;
pub mod levelset;
mod polyline;
pub mod predicates;
pub mod reflect;
pub mod winding;

pub use area::{
    close_through_candidate, isoperimetric_check, weighted_area, weighted_area_grid,
    weighted_area_grid_raw, weighted_area_line, AreaMethod, IsoperimetricCheck,
    WeightedAreaReport,
};
pub use curvature::{gauss_bonnet_audit, signed_curvature, CurvatureProfile, TurningReport};
pub use intersect::{first_loop, loops, self_intersections, self_intersections_naive, Intersection};
pub use levelset::level_set_q;
pub use polyline::Polyline;
pub use predicates::orient2d;
pub use reflect::{project_onto_s_plus, reflect_across_martinet};
pub use winding::winding_number;
