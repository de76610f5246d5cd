//! Sublevel-set minimizers, the length of the candidate and its expansion,
//! and the regularity probe.

pub mod perturb;
pub mod regularity;
pub mod sublevel;

pub use perturb::{perturbation_test, PerturbationOptions, PerturbationReport};
pub use regularity::{log_grid, probe_function, regularity_probe, RegularityReport};
pub use sublevel::{
    build_nu, check_lower_bound, chord_arc_gap, f_rho, length_bar_omega, length_gap,
    tangency_params, tangency_t0, ChordArcReport, FRho, LengthExpansion, LowerBoundReport,
    NuCurve, SublevelProblem,
};
