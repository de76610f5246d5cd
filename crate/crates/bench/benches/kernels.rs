use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mlab_bench::{tangled_walk, wavy_ring};
use mlab_core::extremal::{final_state, integrate_extremal};
use mlab_core::geometry::{self_intersections, weighted_area_grid, weighted_area_line, winding_number};
use mlab_core::{ExtremalParams, PlanarPoint, SignedLog, StructureParams};
use std::hint::black_box;

fn integrator(c: &mut Criterion) {
    let s = StructureParams::new(5, 0.1).unwrap();
    let a = s.a_eps();
    let ep = ExtremalParams::new(a.x2.atan2(a.x1) - 0.1, SignedLog::new(-1, 13.0 * 10f64.ln() - 8.0), 1.02 * a.norm()).unwrap();
    let mut g = c.benchmark_group("integrator");
    for tol in [1e-8, 1e-12] {
        g.bench_with_input(BenchmarkId::new("trajectory", tol), &tol, |b, &tol| {
            b.iter(|| integrate_extremal(&s, black_box(&ep), tol).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("final_state", tol), &tol, |b, &tol| {
            b.iter(|| final_state(&s, black_box(&ep), tol, 8.0 * std::f64::consts::PI).unwrap())
        });
    }
    g.finish();
}

fn area(c: &mut Criterion) {
    let s = StructureParams::new(5, 0.1).unwrap();
    let ring = wavy_ring(400);
    let mut g = c.benchmark_group("weighted_area");
    g.bench_function("line", |b| b.iter(|| weighted_area_line(&s, black_box(&ring)).unwrap()));
    for n in [64, 256] {
        g.bench_with_input(BenchmarkId::new("grid", n), &n, |b, &n| {
            b.iter(|| weighted_area_grid(&s, black_box(&ring), n).unwrap())
        });
    }
    g.finish();
}

fn winding(c: &mut Criterion) {
    let ring = wavy_ring(2000);
    let probes: Vec<PlanarPoint> = (0..100)
        .map(|i| PlanarPoint::new(0.5 + 0.01 * f64::from(i), 0.013 * f64::from(i % 7)))
        .collect();
    c.bench_function("winding/2000-gon x 100 points", |b| {
        b.iter(|| {
            probes
                .iter()
                .map(|&p| winding_number(black_box(&ring), p).unwrap_or(0))
                .sum::<i32>()
        })
    });
}

fn intersections(c: &mut Criterion) {
    let mut g = c.benchmark_group("self_intersections");
    for n in [1000, 4000] {
        let walk = tangled_walk(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &walk, |b, w| b.iter(|| self_intersections(black_box(w))));
    }
    g.finish();
}

criterion_group!(benches, integrator, area, winding, intersections);
criterion_main!(benches);
