//! Discrete signed curvature and the Gauss–Bonnet turning audit.

use super::intersect::self_intersections;
use super::polyline::Polyline;
use super::winding::winding_number;
use crate::error::{Error, Result};
use crate::structure::PlanarPoint;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest relative spread of segment lengths accepted as arclength sampling.
pub const MAX_SPACING_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurvatureProfile {
    /// `(vertex, kappa)` at smooth vertices.
    pub kappa: Vec<(usize, f64)>,
    /// `(vertex, delta)` exterior angles at declared breaks, in `[-pi, pi]`.
    pub corners: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningReport {
    pub smooth_turning: f64,
    pub corner_sum: f64,
    pub total_abs_turning: f64,
    pub cusp_count: usize,
}

impl TurningReport {
    /// `smooth_turning + corner_sum - 2 pi`.
    pub fn residual(&self) -> f64 {
        self.smooth_turning + self.corner_sum - 2.0 * PI
    }
}

/// Vertices at which a turning angle is defined: all distinct vertices of a
/// closed curve, the interior ones of an open curve.
fn turning_vertices(c: &Polyline) -> std::ops::Range<usize> {
    if c.is_closed() {
        0..c.len() - 1
    } else {
        1..c.len() - 1
    }
}

fn incoming(c: &Polyline, i: usize) -> (PlanarPoint, PlanarPoint) {
    let v = c.vertices();
    if i == 0 {
        (v[v.len() - 2], v[0])
    } else {
        (v[i - 1], v[i])
    }
}

fn dir(a: PlanarPoint, b: PlanarPoint) -> (f64, f64) {
    (b.x1 - a.x1, b.x2 - a.x2)
}

fn turn_angle(din: (f64, f64), dout: (f64, f64)) -> f64 {
    let cross = din.0 * dout.1 - din.1 * dout.0;
    let dot = din.0 * dout.0 + din.1 * dout.1;
    cross.atan2(dot)
}

/// Exterior angle at vertex `i`; a reversal (cusp) is resolved to `-pi`
/// when the tip points into the enclosed domain and `+pi` otherwise.
fn corner(c: &Polyline, i: usize) -> (f64, bool) {
    let v = c.vertices();
    let (a, p) = incoming(c, i);
    let b = v[i + 1];
    let (din, dout) = (dir(a, p), dir(p, b));
    let cross = din.0 * dout.1 - din.1 * dout.0;
    let dot = din.0 * dout.0 + din.1 * dout.1;
    let scale = (din.0.hypot(din.1)) * (dout.0.hypot(dout.1));
    let is_cusp = dot < 0.0 && cross.abs() <= 1e-12 * scale;
    if !is_cusp {
        return (turn_angle(din, dout), false);
    }
    if !c.is_closed() {
        return (PI, true);
    }
    let len = din.0.hypot(din.1).min(dout.0.hypot(dout.1));
    let h = 1e-3 * len / din.0.hypot(din.1);
    let beyond = PlanarPoint::new(p.x1 + h * din.0, p.x2 + h * din.1);
    match winding_number(c, beyond) {
        Ok(k) if k != 0 => (-PI, true),
        _ => (PI, true),
    }
}

fn check_spacing(c: &Polyline) -> Result<()> {
    let cum = c.cum_arclength();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for w in cum.windows(2) {
        let d = w[1] - w[0];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let mean = c.length() / c.segment_count() as f64;
    let spread = (hi - lo) / mean;
    if spread > MAX_SPACING_SPREAD {
        return Err(Error::NonUniformParametrization { spread });
    }
    Ok(())
}

/// Turning angle over mean adjacent segment length at smooth vertices;
/// exterior angles at `smooth_breaks`.
pub fn signed_curvature(c: &Polyline, smooth_breaks: &[usize]) -> Result<CurvatureProfile> {
    check_spacing(c)?;
    let v = c.vertices();
    let mut out = CurvatureProfile::default();
    for i in turning_vertices(c) {
        let (delta, _) = corner(c, i);
        if smooth_breaks.contains(&i) {
            out.corners.push((i, delta));
            continue;
        }
        let (a, p) = incoming(c, i);
        let avg = 0.5 * (a.dist(&p) + p.dist(&v[i + 1]));
        out.kappa.push((i, delta / avg));
    }
    Ok(out)
}

/// Turning decomposition of a simple, positively oriented closed curve.
pub fn gauss_bonnet_audit(c: &Polyline, smooth_breaks: &[usize]) -> Result<TurningReport> {
    if !c.is_closed() {
        return Err(Error::UnclosedCurve);
    }
    if let Some(x) = self_intersections(c).first() {
        return Err(Error::NotSimple(x.segments.0, x.segments.1));
    }
    if c.signed_area() <= 0.0 {
        return Err(Error::NotPositivelyOriented);
    }
    Ok(turning(c, smooth_breaks))
}

/// The same decomposition without the simplicity and orientation checks.
pub fn turning(c: &Polyline, smooth_breaks: &[usize]) -> TurningReport {
    let mut report = TurningReport {
        smooth_turning: 0.0,
        corner_sum: 0.0,
        total_abs_turning: 0.0,
        cusp_count: 0,
    };
    let mut smooth = crate::numeric::CompensatedSum::new();
    let mut corners = crate::numeric::CompensatedSum::new();
    for i in turning_vertices(c) {
        let (delta, cusp) = corner(c, i);
        report.total_abs_turning += delta.abs();
        report.cusp_count += usize::from(cusp);
        if smooth_breaks.contains(&i) {
            corners.add(delta);
        } else {
            smooth.add(delta);
        }
    }
    report.smooth_turning = smooth.value();
    report.corner_sum = corners.value();
    report
}
