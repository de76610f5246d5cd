//! Self-intersections of polylines via a uniform spatial hash, plus the
//! brute-force all-pairs variant used as a reference.

use super::polyline::{lerp, Polyline};
use super::predicates::{orient2d, point_segment_distance};
use crate::structure::PlanarPoint;
use std::collections::HashMap;

/// Distance under which non-crossing segments are flagged as tangential.
pub const TANGENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    /// Arclength of the earlier passage.
    pub s: f64,
    /// Arclength of the later passage (`s < t`).
    pub t: f64,
    pub point: PlanarPoint,
    pub segments: (usize, usize),
    /// Touching, collinear or near-tangent pair; not a transverse crossing.
    pub degenerate: bool,
}

/// All segment-pair intersections, sorted by `(t, s)`.
pub fn self_intersections(c: &Polyline) -> Vec<Intersection> {
    let n = c.segment_count();
    if n < 3 {
        return Vec::new();
    }
    let v = c.vertices();
    let cell = 2.0 * c.length() / n as f64;
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let bbox = |i: usize| {
        let (a, b) = (v[i], v[i + 1]);
        (
            a.x1.min(b.x1) - TANGENCY_TOL,
            a.x2.min(b.x2) - TANGENCY_TOL,
            a.x1.max(b.x1) + TANGENCY_TOL,
            a.x2.max(b.x2) + TANGENCY_TOL,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (x0, y0, x1, y1) = bbox(i);
        let (k0, k1) = (key(x0, y0), key(x1, y1));
        for gx in k0.0..=k1.0 {
            for gy in k0.1..=k1.1 {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    let mut out = Vec::new();
    for (&cell_key, members) in &grid {
        for (a, &i) in members.iter().enumerate() {
            let bi = bbox(i);
            for &j in &members[a + 1..] {
                let (i, j) = (i.min(j), i.max(j));
                if adjacent(c, i, j) {
                    continue;
                }
                let bj = bbox(j);
                let (ox, oy) = (bi.0.max(bj.0), bi.1.max(bj.1));
                if ox > bi.2.min(bj.2) || oy > bi.3.min(bj.3) {
                    continue;
                }
                // Test each pair once: in the cell holding the overlap's corner.
                if key(ox, oy) != cell_key {
                    continue;
                }
                if let Some(x) = segment_pair(c, i, j) {
                    out.push(x);
                }
            }
        }
    }
    sort(&mut out);
    out
}

/// Reference O(n^2) implementation.
pub fn self_intersections_naive(c: &Polyline) -> Vec<Intersection> {
    let n = c.segment_count();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adjacent(c, i, j) {
                continue;
            }
            if let Some(x) = segment_pair(c, i, j) {
                out.push(x);
            }
        }
    }
    sort(&mut out);
    out
}

/// `[s-, s+]` of the first loop: the transverse self-intersection whose
/// later passage `t` is smallest.
pub fn first_loop(c: &Polyline) -> Option<(f64, f64)> {
    self_intersections(c)
        .into_iter()
        .find(|x| !x.degenerate)
        .map(|x| (x.s, x.t))
}

/// Successive first loops, each searched on the part of the curve after
/// the previous loop closed.
pub fn loops(c: &Polyline) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let total = c.length();
    let mut offset = 0.0;
    let mut current = c.clone();
    while let Some((s, t)) = first_loop(&current) {
        out.push((offset + s, offset + t));
        offset += t;
        if total - offset <= 0.0 {
            break;
        }
        match current.slice(t, current.length()) {
            Ok(rest) if rest.segment_count() >= 3 => current = rest,
            _ => break,
        }
    }
    out
}

fn sort(v: &mut [Intersection]) {
    v.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.s.total_cmp(&b.s)));
}

fn adjacent(c: &Polyline, i: usize, j: usize) -> bool {
    j == i + 1 || (c.is_closed() && i == 0 && j + 1 == c.segment_count())
}

fn segment_pair(c: &Polyline, i: usize, j: usize) -> Option<Intersection> {
    let v = c.vertices();
    let cum = c.cum_arclength();
    let (a, b, p, q) = (v[i], v[i + 1], v[j], v[j + 1]);
    let o1 = orient2d(a, b, p);
    let o2 = orient2d(a, b, q);
    let o3 = orient2d(p, q, a);
    let o4 = orient2d(p, q, b);
    let make = |alpha: f64, beta: f64, degenerate: bool| Intersection {
        s: cum[i] + alpha * (cum[i + 1] - cum[i]),
        t: cum[j] + beta * (cum[j + 1] - cum[j]),
        point: lerp(a, b, alpha),
        segments: (i, j),
        degenerate,
    };
    let sign = |x: f64| if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 };
    let (s1, s2, s3, s4) = (sign(o1), sign(o2), sign(o3), sign(o4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        let alpha = (o3 / (o3 - o4)).clamp(0.0, 1.0);
        let beta = (o1 / (o1 - o2)).clamp(0.0, 1.0);
        return Some(make(alpha, beta, false));
    }
    // Not a transverse crossing: flag touching or nearly touching pairs.
    let candidates = [
        (point_segment_distance(p, a, b), p, true, 0.0),
        (point_segment_distance(q, a, b), q, true, 1.0),
        (point_segment_distance(a, p, q), a, false, 0.0),
        (point_segment_distance(b, p, q), b, false, 1.0),
    ];
    let (d, pt, on_first, end) = candidates
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("four candidates");
    if d > TANGENCY_TOL {
        return None;
    }
    let project = |x: PlanarPoint, s0: PlanarPoint, s1: PlanarPoint| {
        let (dx, dy) = (s1.x1 - s0.x1, s1.x2 - s0.x2);
        (((x.x1 - s0.x1) * dx + (x.x2 - s0.x2) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0)
    };
    let (alpha, beta) = if on_first {
        (project(pt, a, b), end)
    } else {
        (end, project(pt, p, q))
    };
    Some(make(alpha, beta, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn figure_eight(n: usize) -> Polyline {
        let v = (0..n)
            .map(|i| {
                let a = TAU * (i as f64 + 0.25) / n as f64;
                PlanarPoint::new(a.sin(), a.sin() * a.cos())
            })
            .collect();
        Polyline::closed_ring(v).unwrap()
    }

    #[test]
    fn spiral_is_injective() {
        let v = (0..500)
            .map(|i| {
                let a = 0.05 * i as f64;
                let r = 0.1 + 0.02 * a;
                PlanarPoint::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let c = Polyline::open(v).unwrap();
        assert!(self_intersections(&c).is_empty());
        assert!(first_loop(&c).is_none());
    }

    #[test]
    fn figure_eight_crosses_once() {
                let c = figure_eight(201);
        let x = self_intersections(&c);
        assert_eq!(x.len(), 1, "{x:?}");
        assert!(!x[0].degenerate);
        assert!(x[0].point.norm() < 1e-3);
        assert_eq!(x, self_intersections_naive(&c));
    }

    #[test]
    fn touching_pair_is_flagged() {
        let c = Polyline::open(vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(2.0, 0.0),
            PlanarPoint::new(2.0, 1.0),
            PlanarPoint::new(1.0, 1.0),
            PlanarPoint::new(1.0, 0.0),
        ])
        .unwrap();
        let x = self_intersections(&c);
        assert_eq!(x.len(), 1);
        assert!(x[0].degenerate);
        assert!(first_loop(&c).is_none());
    }

    #[test]
    fn repeated_loops_are_enumerated() {
        // a curve making three small curls while drifting right
        let v = (0..3000)
            .map(|i| {
                let a = TAU / 2.0 + 3.0 * TAU * i as f64 / 2999.0;
                PlanarPoint::new(0.05 * a - 0.3 * a.sin(), 0.3 * (1.0 - a.cos()))
            })
            .collect();
        let c = Polyline::open_dedup(v).unwrap();
        let l = loops(&c);
        assert_eq!(l.len(), 3, "{l:?}");
        for w in l.windows(2) {
            assert!(w[0].1 <= w[1].0 + 1e-9);
        }
    }
}
