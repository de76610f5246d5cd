//! Extremals `omega' = (cos theta, sin theta)`, `theta' = lambda Q(omega)`,
//! integrated together with the running constraint `int P^2 dx2`.

pub mod diagnostics;
pub mod ode;
pub mod partition;
pub mod trajectory;

pub use diagnostics::{diagnostics, DiagnosticsReport, LoopInfo, Verdict};
pub use partition::{sign_partition, Label, SignPartition};
pub use trajectory::{
    final_state, integrate_extremal, integrate_from, integrate_limited, wrap_angle, ExtremalParams,
    ExtremalTrajectory, Sample,
};
