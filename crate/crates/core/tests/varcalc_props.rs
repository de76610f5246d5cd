use mlab_core::varcalc::sublevel::{d1_bound, d2_sharp_constant, gamma_rho};
use mlab_core::varcalc::*;
use mlab_core::{PlanarPoint, StructureParams};
use proptest::prelude::*;

fn unit(a: PlanarPoint, b: PlanarPoint) -> (f64, f64) {
    let (dx, dy) = (b.x1 - a.x1, b.x2 - a.x2);
    let n = dx.hypot(dy);
    (dx / n, dy / n)
}

fn tangent(s: &StructureParams, rho: f64, t: f64) -> (f64, f64) {
    let d = f_rho(s, rho, t).unwrap().d1;
    let n = d.hypot(1.0);
    (d / n, 1.0 / n)
}

proptest! {
    #[test]
    fn derivative_bounds(m in prop::sample::select(vec![5u32, 7, 9]), t in 0.0..0.3f64, lr in -16.0..-2.0f64) {
        let s = StructureParams::new(m, 0.1).unwrap();
        let f = f_rho(&s, 10f64.powf(lr), t).unwrap();
        let mbar = s.mbar();
        prop_assert!(f.d1 >= 0.0 && f.d1 <= d1_bound(&s, t) + 1e-12);
        // The sharp constant; the classical mbar (mbar - 1) is exceeded at
        // intermediate t^m / rho.
        prop_assert!(f.d2 >= -1e-12 && f.d2 <= d2_sharp_constant(&s) * t.powf(mbar - 2.0) + 1e-12,
            "f'' = {} at t = {t}", f.d2);
    }

    #[test]
    fn nu_is_tangent_to_the_level_curve(m in prop::sample::select(vec![5u32, 7]), lr in -14.0..-7.0f64) {
        let s = StructureParams::new(m, 0.1).unwrap();
        let rho = 10f64.powf(lr) * s.pow_mbar(0.1).powi(2);
        let nu = build_nu(&SublevelProblem::new(s, rho, 1.0).unwrap(), 1e4).unwrap();
        prop_assume!(nu.t0 > 0.0);
        let (g0, g1) = (gamma_rho(&s, rho, nu.t0), gamma_rho(&s, rho, nu.t1));
        let d0 = unit(PlanarPoint::ORIGIN, g0);
        let d1 = unit(g1, s.a_eps());
        let (k0, k1) = (tangent(&s, rho, nu.t0), tangent(&s, rho, nu.t1));
        // A segment of length l between points of size |A_eps| has its
        // direction known only to ~ulp(|A_eps|) / l; the last segment gets
        // very short as rho -> 0.
        let resolvable = |l: f64| 1e-10_f64.max(8.0 * f64::EPSILON * s.a_eps().norm() / l);
        let (l0, l1) = (g0.norm(), g1.dist(&s.a_eps()));
        prop_assert!((d0.0 - k0.0).hypot(d0.1 - k0.1) <= resolvable(l0), "{d0:?} vs {k0:?}");
        prop_assert!((d1.0 - k1.0).hypot(d1.1 - k1.1) <= resolvable(l1), "{d1:?} vs {k1:?}");
        let v = nu.polyline.vertices();
        prop_assert_eq!(v[0], PlanarPoint::ORIGIN);
        prop_assert_eq!(*v.last().unwrap(), s.a_eps());
    }
}

#[test]
fn nu_length_is_nonincreasing_in_rho() {
    for m in [5u32, 7] {
        let s = StructureParams::new(m, 0.1).unwrap();
        let base = SublevelProblem::new(s, 1e-20, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let rho = 10f64.powf(-20.0 + 0.4 * f64::from(i));
            let nu = build_nu(&base.with_rho(rho).unwrap(), 1e3).unwrap();
            let len = nu.length();
            assert!(len <= prev * (1.0 + 1e-14), "m={m} rho={rho:e}: {len} > {prev}");
            prev = len;
        }
        // Large rho: the chord itself.
        assert!((prev - s.a_eps().norm()).abs() < 1e-15);
    }
}

#[test]
fn chord_arc_inequality_on_a_grid() {
    for m in [5u32, 7] {
        let s = StructureParams::new(m, 0.1).unwrap();
        for lr in [-14.0, -11.0, -8.0, -5.0] {
            let rho = 10f64.powf(lr);
            for i in 0..=12 {
                for j in i..=12 {
                    let (t, u) = (0.1 * f64::from(i) / 12.0, 0.1 * f64::from(j) / 12.0);
                    let r = chord_arc_gap(&s, rho, t, u).unwrap();
                    assert!(r.holds, "m={m} rho={rho:e} t={t} s={u}: {r:?}");
                    assert!(r.gap >= -1e-18);
                }
            }
        }
    }
}

#[test]
fn probe_calibrates_on_a_pure_power() {
    let grid = log_grid(1e-5, 1e-3, 9);
    for m in [5u32, 7, 9] {
        let mbar = f64::from(m) / 2.0;
        let kmax = (mbar + 0.5).floor() as u32;
        for k in 1..=kmax {
            let r = probe_function(|t| t.abs().powf(mbar), k, &grid).unwrap();
            assert!((r.fitted_alpha - (mbar - f64::from(k))).abs() <= 0.05, "m={m} k={k}: {}", r.fitted_alpha);
            assert!((r.fitted_alpha_one_sided - (mbar - f64::from(k))).abs() <= 0.05);
        }
    }
}
