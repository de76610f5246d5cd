//! Curve fixtures shared by the benchmarks.

use mlab_core::{PlanarPoint, Polyline};
use std::f64::consts::TAU;

/// Closed ring with `n` vertices and a wavy radius, centred off the axis.
pub fn wavy_ring(n: usize) -> Polyline {
    let v = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            let r = 0.4 + 0.08 * (5.0 * a).sin();
            PlanarPoint::new(1.0 + r * a.cos(), r * a.sin())
        })
        .collect();
    Polyline::closed_ring(v).expect("ring is valid")
}

/// Open spiral-like walk of `n` vertices that crosses itself many times.
pub fn tangled_walk(n: usize) -> Polyline {
    let v = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let a = 40.0 * TAU * t;
            PlanarPoint::new(t + 0.05 * a.cos(), 0.05 * a.sin())
        })
        .collect();
    Polyline::open(v).expect("walk is valid")
}
