//! Level sets of `Q` along horizontal lines: nonnegative roots `x1` of
//! `4 x1^3 - 4 x1 x2^m - level = 0`.

use crate::numeric::ipow;
use crate::structure::StructureParams;
use std::f64::consts::PI;

/// Roots `x1 >= 0` of `Q(x1, x2) = level`, increasing, with (numerically)
/// double roots reported once.
pub fn level_set_q(params: &StructureParams, level: f64, x2: f64) -> Vec<f64> {
    let c = ipow(x2, params.m());
    // Depressed cubic x^3 + p x + q = 0.
    let p = -c;
    let q = -level / 4.0;
    let mut roots = cubic_roots(p, q);
    for r in &mut roots {
        *r = polish(*r, p, q);
    }
    roots.retain(|&r| r >= 0.0);
    roots.sort_by(f64::total_cmp);
    let scale = c.abs().sqrt().max(q.abs().cbrt()).max(f64::MIN_POSITIVE);
    roots.dedup_by(|b, a| (*b - *a).abs() <= 1e-7 * scale);
    roots
}

fn cubic_roots(p: f64, q: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![(-q).cbrt()];
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let disc_scale = (q / 2.0).powi(2).max((p / 3.0).abs().powi(3));
    if disc.abs() <= 1e-12 * disc_scale {
        // (Numerically) double root.
        let u = (-q / 2.0).cbrt();
        return vec![2.0 * u, -u];
    }
    if disc < 0.0 {
        // Three real roots (p < 0).
        let r = (-p / 3.0).sqrt();
        let arg = ((-q / 2.0) / (r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos())
            .collect()
    } else {
        // One real root; Cardano with the larger-magnitude cube root first.
        let s = disc.sqrt();
        let a = -q / 2.0;
        let u = (a + a.signum() * s).cbrt();
        let v = -p / (3.0 * u);
        vec![u + v]
    }
}

fn polish(x: f64, p: f64, q: f64) -> f64 {
    let f = x * x * x + p * x + q;
    let df = 3.0 * x * x + p;
    if df == 0.0 || !df.is_finite() {
        return x;
    }
    let y = x - f / df;
    let fy = y * y * y + p * y + q;
    if fy.abs() <= f.abs() {
        y
    } else {
        x
    }
}
