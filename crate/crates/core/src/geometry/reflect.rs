//! Reflection across the set made of the negative `x2` half-axis and the
//! upper branch of `{P = 0}`, via projection onto the convex region to its
//! right, `S+ = {x1 >= g(x2)}` with `g(u) = max(u, 0)^mbar`.

use super::polyline::Polyline;
use crate::error::{Error, Result};
use crate::structure::{PlanarPoint, StructureParams};

/// Tolerance (relative to the local scale) for a vertex on the wrong side.
pub const SIDE_TOL: f64 = 1e-12;

fn g(params: &StructureParams, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        params.pow_mbar(u)
    }
}

fn dg(params: &StructureParams, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        params.mbar() * params.pow_mbar(u) / u
    }
}

fn ddg(params: &StructureParams, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        let mb = params.mbar();
        mb * (mb - 1.0) * params.pow_mbar(u) / (u * u)
    }
}

/// Nearest point of the closed convex set `S+` to `x`.
pub fn project_onto_s_plus(params: &StructureParams, x: PlanarPoint) -> PlanarPoint {
    if x.x1 >= g(params, x.x2) {
        return x;
    }
    // The foot sigma(u) = (g(u), u) solves h(u) = 0 with
    // h(u) = (u - x2) + (g(u) - x1) g'(u), increasing wherever g(u) >= x1.
    let h = |u: f64| (u - x.x2) + (g(params, u) - x.x1) * dg(params, u);
    let (mut lo, mut hi) = if x.x1 <= 0.0 {
        (x.x2 - (g(params, x.x2) - x.x1), x.x2)
    } else {
        (x.x1.powf(1.0 / params.mbar()), x.x2)
    };
    if h(lo) > 0.0 {
        lo = lo.min(x.x2) - (hi - lo).abs() - 1.0;
    }
    let mut u = 0.5 * (lo + hi);
    let scale = x.x2.abs().max(x.x1.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let hu = h(u);
        let dh = 1.0 + dg(params, u).powi(2) + (g(params, u) - x.x1) * ddg(params, u);
        if hu == 0.0 || (hu / dh).abs() <= 1e-16 * scale {
            break;
        }
        if hu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
        let newton = u - hu / dh;
        u = if newton >= lo && newton <= hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    PlanarPoint::new(g(params, u), u)
}

/// `R_r(x) = x + (1 + r) (pi(x) - x)`.
pub fn reflect_point(params: &StructureParams, x: PlanarPoint, r: f64) -> PlanarPoint {
    let p = project_onto_s_plus(params, x);
    PlanarPoint::new(x.x1 + (1.0 + r) * (p.x1 - x.x1), x.x2 + (1.0 + r) * (p.x2 - x.x2))
}

/// Reflects every vertex; all vertices must lie outside `S+` (or on its boundary).
pub fn reflect_across_martinet(
    params: &StructureParams,
    c: &Polyline,
    r: f64,
) -> Result<Polyline> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!("reflection ratio r = {r} not in (0, 1]")));
    }
    let mut out = Vec::with_capacity(c.len());
    for (index, &x) in c.vertices().iter().enumerate() {
        let gx = g(params, x.x2);
        if x.x1 - gx > SIDE_TOL * gx.abs().max(x.x1.abs()).max(1e-300) {
            return Err(Error::WrongSide { index });
        }
        out.push(reflect_point(params, x, r));
    }
    if c.is_closed() {
        let first = out[0];
        *out.last_mut().expect("nonempty") = first;
        Polyline::closed(out)
    } else {
        Polyline::open_dedup(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> StructureParams {
        StructureParams::new(5, 0.1).unwrap()
    }

    #[test]
    fn boundary_points_are_fixed() {
        let s = p5();
        for x in [
            PlanarPoint::new(0.0, -1.0),
            s.omega_bar(0.3),
            PlanarPoint::ORIGIN,
        ] {
            assert_eq!(reflect_point(&s, x, 0.5), x);
        }
    }

    #[test]
    fn mirror_across_the_half_axis() {
        let s = p5();
        let y = reflect_point(&s, PlanarPoint::new(-0.7, -0.2), 1.0);
        assert!((y.x1 - 0.7).abs() < 1e-15 && (y.x2 + 0.2).abs() < 1e-15);
    }

    #[test]
    fn projection_matches_dense_sampling() {
        let s = p5();
        let x = PlanarPoint::new(0.01, 0.4);
        let p = project_onto_s_plus(&s, x);
        let mut best = f64::INFINITY;
        for i in 0..=200_000 {
            let u = -0.1 + 0.6 * i as f64 / 200_000.0;
            best = best.min(x.dist(&PlanarPoint::new(g(&s, u), u)));
        }
        assert!(x.dist(&p) <= best + 1e-12, "{p:?} {} {best}", x.dist(&p));
        assert!((x.dist(&p) - best).abs() < 1e-6);
    }

    #[test]
    fn wrong_side_is_rejected() {
        let s = p5();
        let c = Polyline::open(vec![PlanarPoint::new(-1.0, 0.0), PlanarPoint::new(1.0, 0.1)]).unwrap();
        assert!(matches!(
            reflect_across_martinet(&s, &c, 1.0),
            Err(Error::WrongSide { index: 1 })
        ));
    }
}
