//! Fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use mlab_core::extremal::{integrate_limited, ExtremalParams, ExtremalTrajectory};
use mlab_core::shooting::Target;
use mlab_core::{PlanarPoint, SignedLog, StructureParams};

/// A manufactured extremal with moderate winding: heading a little below
/// the chord, length slightly above `|A_eps|`, and the `log|lambda|` on a
/// coarse scan whose total turning is closest to 1.5 rad.
pub fn manufactured(params: &StructureParams) -> (ExtremalParams, ExtremalTrajectory) {
    let a = params.a_eps();
    let theta0 = a.x2.atan2(a.x1) - 0.1;
    let t_end = 1.02 * a.norm();
    let lam0 = -(3.0 * f64::from(params.m()) - 2.0) * params.epsilon().ln();
    let mut best: Option<(f64, ExtremalParams, ExtremalTrajectory)> = None;
    let origin = PlanarPoint::new(0.0, 0.0);
    for i in 0..=120 {
        let ll = lam0 - 30.0 + 0.25 * f64::from(i);
        let ep = ExtremalParams::new(theta0, SignedLog::new(-1, ll), t_end).unwrap();
        let Ok(tr) = integrate_limited(params, origin, &ep, 1e-12, 8.0 * std::f64::consts::PI) else {
            continue;
        };
        let turning: f64 = tr.samples.windows(2).map(|w| (w[1].theta - w[0].theta).abs()).sum();
        let score = (turning - 1.5).abs();
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, ep, tr));
        }
    }
    let (_, ep, tr) = best.expect("no manufactured extremal");
    (ep, tr)
}

pub fn target_of(tr: &ExtremalTrajectory) -> Target {
    Target {
        endpoint: tr.endpoint(),
        constraint: tr.constraint(),
        endpoint_only: false,
    }
}

/// Multiplies each of `theta0`, `|lambda|`, `T` by `1 + 0.01 s_i`.
pub fn perturbed(ep: &ExtremalParams, s: [f64; 3]) -> ExtremalParams {
    ExtremalParams::new(
        ep.theta0 * (1.0 + 0.01 * s[0]),
        SignedLog::new(ep.lambda.sign, ep.lambda.log_mag + (1.0 + 0.01 * s[1]).ln()),
        ep.t_end * (1.0 + 0.01 * s[2]),
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Closed test polygons in `x1 >= 0` from a seeded generator: a star-shaped
/// ring around a random centre.
pub fn random_ring(rng: &mut impl rand::Rng, n: usize) -> mlab_core::Polyline {
    let cx = rng.random_range(0.6..1.4);
    let cy = rng.random_range(-0.6..0.6);
    let r0 = rng.random_range(0.2..0.5);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let phi = std::f64::consts::TAU * (k as f64 + rng.random_range(0.0..0.5)) / n as f64;
        let r = r0 * rng.random_range(0.5..1.0);
        v.push(PlanarPoint::new(cx + r * phi.cos(), cy + r * phi.sin()));
    }
    mlab_core::Polyline::closed_ring(v).unwrap()
}

fn arclength_ring(n: usize, total: f64, f: impl Fn(f64) -> PlanarPoint) -> mlab_core::Polyline {
    mlab_core::Polyline::closed_ring((0..n).map(|i| f(total * i as f64 / n as f64)).collect()).unwrap()
}

/// Unit circle, `n` vertices at equal arclength.
pub fn circle(n: usize) -> mlab_core::Polyline {
    arclength_ring(n, std::f64::consts::TAU, |s| PlanarPoint::new(s.cos(), s.sin()))
}

/// Two straights of length 2 joined by unit half-circles, equal spacing.
pub fn stadium(n: usize) -> mlab_core::Polyline {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    arclength_ring(n, 4.0 + TAU, |s| {
        if s < 2.0 {
            PlanarPoint::new(-1.0 + s, -1.0)
        } else if s < 2.0 + PI {
            let a = s - 2.0 - FRAC_PI_2;
            PlanarPoint::new(1.0 + a.cos(), a.sin())
        } else if s < 4.0 + PI {
            PlanarPoint::new(1.0 - (s - 2.0 - PI), 1.0)
        } else {
            let a = s - 4.0 - FRAC_PI_2;
            PlanarPoint::new(-1.0 + a.cos(), a.sin())
        }
    })
}

/// Equilateral triangle with `side` vertices per side; the corner indices
/// are `0, side, 2 side`.
pub fn triangle(side: usize) -> mlab_core::Polyline {
    let corners = [
        PlanarPoint::new(0.0, 0.0),
        PlanarPoint::new(1.0, 0.0),
        PlanarPoint::new(0.5, 3f64.sqrt() / 2.0),
    ];
    let mut v = Vec::with_capacity(3 * side);
    for k in 0..3 {
        let (a, b) = (corners[k], corners[(k + 1) % 3]);
        for i in 0..side {
            let s = i as f64 / side as f64;
            v.push(PlanarPoint::new(a.x1 + s * (b.x1 - a.x1), a.x2 + s * (b.x2 - a.x2)));
        }
    }
    mlab_core::Polyline::closed_ring(v).unwrap()
}

pub fn unit_square() -> mlab_core::Polyline {
    mlab_core::Polyline::closed_ring(vec![
        PlanarPoint::new(0.0, 0.0),
        PlanarPoint::new(1.0, 0.0),
        PlanarPoint::new(1.0, 1.0),
        PlanarPoint::new(0.0, 1.0),
    ])
    .unwrap()
}
