use super::polyline::Polyline;
use super::predicates::{orient2d, point_segment_distance};
use crate::error::{Error, Result};
use crate::structure::PlanarPoint;

/// Largest supported |winding number|.
pub const MAX_WINDING: i64 = 64;

/// Default distance below which a query point counts as lying on the curve.
pub const ON_CURVE_TOL: f64 = 1e-13;

/// Index of `p` with respect to the closed curve `c` (counterclockwise
/// circle around `p` gives +1).
///
/// Upward crossings of the rightward ray from `p` count +1, downward ones
/// -1; the side test is the exact orientation predicate, so the answer does
/// not depend on rounding for points off the curve.
pub fn winding_number(c: &Polyline, p: PlanarPoint) -> Result<i32> {
    winding_number_tol(c, p, ON_CURVE_TOL)
}

pub fn winding_number_tol(c: &Polyline, p: PlanarPoint, tol: f64) -> Result<i32> {
    if !c.is_closed() {
        return Err(Error::UnclosedCurve);
    }
    let v = c.vertices();
    let mut k: i64 = 0;
    for (i, w) in v.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let d = point_segment_distance(p, a, b);
        if d <= tol {
            return Err(Error::PointOnCurve {
                segment: i,
                distance: d,
            });
        }
        if a.x2 <= p.x2 {
            if b.x2 > p.x2 && orient2d(a, b, p) > 0.0 {
                k += 1;
            }
        } else if b.x2 <= p.x2 && orient2d(a, b, p) < 0.0 {
            k -= 1;
        }
    }
    if k.abs() > MAX_WINDING {
        return Err(Error::WindingOverflow(k));
    }
    Ok(k as i32)
}

/// Crossings of the horizontal line `x2 = y` by the closed curve, as
/// `(x1, direction)` sorted by `x1`, where direction is +1 for upward edges.
/// The winding number of a point `(x, y)` off the curve is the sum of the
/// directions of the crossings to its right.
pub fn row_crossings(c: &Polyline, y: f64) -> Vec<(f64, i32)> {
    let mut out = Vec::new();
    for w in c.vertices().windows(2) {
        let (a, b) = (w[0], w[1]);
        let dir = if a.x2 <= y && b.x2 > y {
            1
        } else if b.x2 <= y && a.x2 > y {
            -1
        } else {
            continue;
        };
        let t = (y - a.x2) / (b.x2 - a.x2);
        out.push((a.x1 + t * (b.x1 - a.x1), dir));
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Winding numbers on the open intervals between sorted crossings:
/// entry `i` is the index of points strictly between crossing `i` and `i+1`.
pub fn interval_windings(crossings: &[(f64, i32)]) -> Vec<i64> {
    // Points left of every crossing see all of them on their right.
    let total: i64 = crossings.iter().map(|c| i64::from(c.1)).sum();
    let mut k = total;
    let mut out = Vec::with_capacity(crossings.len().saturating_sub(1));
    for c in crossings.iter().take(crossings.len().saturating_sub(1)) {
        k -= i64::from(c.1);
        out.push(k);
    }
    out
}
