use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative argument {0} where a nonnegative one is required")]
    NegativeArgument(f64),

    // curve geometry
    #[error("a polyline needs at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },
    #[error("consecutive vertices {index} and {} coincide", index + 1)]
    RepeatedVertex { index: usize },
    #[error("non-finite vertex at index {index}")]
    NonFiniteVertex { index: usize },
    #[error("curve is not closed")]
    UnclosedCurve,
    #[error("point lies on the curve (segment {segment}, distance {distance:e})")]
    PointOnCurve { segment: usize, distance: f64 },
    #[error("winding number {0} exceeds the supported range |k| <= 64")]
    WindingOverflow(i64),
    #[error("grid resolution {0} is too coarse; at least 32 cells are required")]
    ResolutionTooCoarse(usize),
    #[error("arclength spacing varies by {spread:.3} (relative); at most 0.05 allowed")]
    NonUniformParametrization { spread: f64 },
    #[error("curve is not simple: segments {0} and {1} intersect")]
    NotSimple(usize, usize),
    #[error("curve is not positively oriented")]
    NotPositivelyOriented,
    #[error("vertex {index} lies strictly inside the reflection set")]
    WrongSide { index: usize },

    // integration and root finding
    #[error("step size {h:e} underflowed at s = {s}")]
    StepUnderflow { s: f64, h: f64 },
    #[error("maximum step count {0} exceeded")]
    TooManySteps(usize),
    #[error("trajectory winds too much: more than {0} samples")]
    TooManySamples(usize),
    #[error("total turning exceeded {0}")]
    TurningLimit(f64),
    #[error("sign of P unresolved over [{s0}, {s1}] (tangency to the Martinet curve?)")]
    UnresolvedZero { s0: f64, s1: f64 },
    #[error("no sign change in the bracket although the chord meets the level curve")]
    BracketFailure,

    // sweeps
    #[error("epsilon values must be strictly descending")]
    InputNotSorted,
    #[error("rho values outside the regime rho < K eps^(3mbar-1): {0:?}")]
    RegimeViolation(Vec<f64>),
    #[error("divided differences are at the noise floor for h = {0:e}")]
    NoiseFloor(f64),

    // persistence
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
