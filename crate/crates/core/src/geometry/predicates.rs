//! Robust orientation test: a floating-point filter backed by exact
//! expansion arithmetic when the filter cannot certify the sign.

use crate::numeric::{two_prod, two_sum};
use crate::structure::PlanarPoint;

/// Sign of the determinant `| b-a  c-a |`: positive when `a, b, c` turn
/// counterclockwise, negative when clockwise, zero when collinear. Only the
/// sign is exact; the magnitude is the rounded determinant.
pub fn orient2d(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    let detleft = (a.x1 - c.x1) * (b.x2 - c.x2);
    let detright = (a.x2 - c.x2) * (b.x1 - c.x1);
    let det = detleft - detright;
    let detsum = detleft.abs() + detright.abs();
    // Shewchuk's ccwerrboundA.
    let bound = (3.0 + 16.0 * f64::EPSILON) * f64::EPSILON * detsum;
    if det.abs() > bound {
        return det;
    }
    let s = orient2d_exact_sign(a, b, c);
    if s == 0.0 {
        0.0
    } else if det != 0.0 && det.signum() == s {
        det
    } else {
        s * f64::MIN_POSITIVE
    }
}

/// Exact sign (-1, 0, +1) of the orientation determinant, expanded as
/// `ax*by - ay*bx + bx*cy - by*cx + cx*ay - cy*ax` with every product split
/// error-free and the terms summed into a nonoverlapping expansion.
pub fn orient2d_exact_sign(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    let terms = [
        two_prod(a.x1, b.x2),
        neg(two_prod(a.x2, b.x1)),
        two_prod(b.x1, c.x2),
        neg(two_prod(b.x2, c.x1)),
        two_prod(c.x1, a.x2),
        neg(two_prod(c.x2, a.x1)),
    ];
    let mut expansion: Vec<f64> = Vec::with_capacity(12);
    for (hi, lo) in terms {
        grow_expansion(&mut expansion, lo);
        grow_expansion(&mut expansion, hi);
    }
    // Components are nonoverlapping with increasing magnitude, so the last
    // nonzero one carries the sign.
    expansion
        .iter()
        .rev()
        .find(|&&x| x != 0.0)
        .map_or(0.0, |x| x.signum())
}

fn neg((hi, lo): (f64, f64)) -> (f64, f64) {
    (-hi, -lo)
}

/// Add `b` to the expansion `e` (Shewchuk's Grow-Expansion with zero elimination).
fn grow_expansion(e: &mut Vec<f64>, b: f64) {
    let mut q = b;
    let mut out = Vec::with_capacity(e.len() + 1);
    for &x in e.iter() {
        let (s, err) = two_sum(q, x);
        if err != 0.0 {
            out.push(err);
        }
        q = s;
    }
    if q != 0.0 || out.is_empty() {
        out.push(q);
    }
    *e = out;
}

/// Distance from `p` to the segment `a b`.
pub fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let (dx, dy) = (b.x1 - a.x1, b.x2 - a.x2);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x1 - a.x1) * dx + (p.x2 - a.x2) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.x1 - (a.x1 + t * dx)).hypot(p.x2 - (a.x2 + t * dy))
}
