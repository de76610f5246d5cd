//! Length minimizers in the sublevel set `{P <= rho, x1 > 0}`: the level
//! curve `Gamma_rho(t) = (f_rho(t), t)`, its tangency points as seen from
//! `A_0` and `A_eps`, and the minimizer `nu` (segment, level arc, segment).

use crate::error::{Error, Result};
use crate::geometry::Polyline;
use crate::numeric::ipow;
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::structure::{PlanarPoint, StructureParams};
use serde::{Deserialize, Serialize};

const QUAD_REL: f64 = 1e-14;

/// `f_rho(t) = sqrt(t^m + rho)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FRho {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn f_rho(params: &StructureParams, rho: f64, t: f64) -> Result<FRho> {
    if t < 0.0 {
        return Err(Error::NegativeArgument(t));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    Ok(f_rho_unchecked(params.m(), rho, t))
}

fn f_rho_unchecked(m: u32, rho: f64, t: f64) -> FRho {
    let mbar = f64::from(m) / 2.0;
    let tm = ipow(t, m);
    let f = (tm + rho).sqrt();
    let tm2 = if m >= 2 { ipow(t, m - 2) } else { 1.0 };
    let d1 = mbar * tm2 * t / f;
    // f'' = mbar t^(m-2) ((m-1) f^2 - mbar t^m) / f^3, with f^2 = t^m + rho.
    let d2 = mbar * tm2 * ((f64::from(m) - 1.0) * rho + (mbar - 1.0) * tm) / (f * f * f);
    FRho { value: f, d1, d2 }
}

/// Upper bound on `f_rho'`: `mbar t^(mbar-1)`.
pub fn d1_bound(params: &StructureParams, t: f64) -> f64 {
    params.mbar() * t.powf(params.mbar() - 1.0)
}

/// The constant `mbar (mbar - 1)` in the classical bound
/// `f_rho'' <= mbar (mbar - 1) t^(mbar-2)`. This only holds in the limit
/// `rho -> 0`; see [`d2_sharp_constant`].
pub fn d2_classical_constant(params: &StructureParams) -> f64 {
    params.mbar() * (params.mbar() - 1.0)
}

/// Smallest `C` with `f_rho''(t) <= C t^(mbar-2)` for all `t, rho > 0`.
///
/// With `y = t^m / (t^m + rho)`, `f'' = mbar t^(mbar-2) sqrt(y) ((m-1) - mbar y)`,
/// maximal at `y = 2(m-1)/(3m)`.
pub fn d2_sharp_constant(params: &StructureParams) -> f64 {
    let m = f64::from(params.m());
    let mbar = params.mbar();
    let y = 2.0 * (m - 1.0) / (3.0 * m);
    mbar * y.sqrt() * ((m - 1.0) - mbar * y)
}

/// Regime `rho < K eps^(3 mbar - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelProblem {
    pub params: StructureParams,
    pub rho: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub regime_ok: bool,
}

impl SublevelProblem {
    pub fn new(params: StructureParams, rho: f64, k: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("K = {k} must be positive")));
        }
        Ok(Self {
            params,
            rho,
            k,
            regime_ok: rho < regime_limit(&params, k),
        })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.params, rho, self.k)
    }
}

pub fn regime_limit(params: &StructureParams, k: f64) -> f64 {
    k * params.epsilon().powf(3.0 * params.mbar() - 1.0)
}

/// Point of `Gamma_rho` whose tangent passes through the origin:
/// `rho = (mbar - 1) t0^m`.
pub fn tangency_t0(params: &StructureParams, rho: f64) -> f64 {
    (rho / (params.mbar() - 1.0)).powf(1.0 / f64::from(params.m()))
}

/// Tangency parameters `(t0, t1)`: `[A_0, Gamma(t0)]` and `[Gamma(t1), A_eps]`
/// are tangent to `Gamma_rho`. `(0, 0)` when the chord `[A_0, A_eps]` does
/// not enter `{P > rho}`.
pub fn tangency_params(params: &StructureParams, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    let m = params.m();
    let eps = params.epsilon();
    let eps_mbar = params.pow_mbar(eps);
    let t0 = tangency_t0(params, rho);
    // The chord x1 = eps^(mbar-1) x2 leaves the sublevel set iff it is
    // steeper than the tangent from the origin and touches before eps.
    let chord_slope = eps_mbar / eps;
    if !(t0 < eps && chord_slope > f_rho_unchecked(m, rho, t0).d1) {
        return Ok((0.0, 0.0));
    }
    let g = |t: f64| {
        let f = f_rho_unchecked(m, rho, t);
        (f.value + f.d1 * (eps - t) - eps_mbar, f.d2 * (eps - t))
    };
    let (mut lo, mut hi) = (t0, eps);
    let (g_lo, _) = g(lo);
    let (g_hi, _) = g(hi);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::BracketFailure);
    }
    let target = 1e-14 * eps_mbar;
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (gv, dg) = g(t);
        if gv.abs() <= target {
            break;
        }
        if gv < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - gv / dg;
        t = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok((t0, t))
}

pub fn gamma_rho(params: &StructureParams, rho: f64, t: f64) -> PlanarPoint {
    PlanarPoint::new(f_rho_unchecked(params.m(), rho, t).value, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuCurve {
    pub t0: f64,
    pub t1: f64,
    pub polyline: Polyline,
    /// `(L1, L2, L3)`: first segment, level arc, last segment.
    pub segment_lengths: (f64, f64, f64),
}

impl NuCurve {
    pub fn length(&self) -> f64 {
        let (a, b, c) = self.segment_lengths;
        a + b + c
    }
}

/// Arclength of `Gamma_rho` over `[a, b]`.
pub fn level_arc_length(params: &StructureParams, rho: f64, a: f64, b: f64) -> f64 {
    let m = params.m();
    integrate_adaptive(
        |t| f_rho_unchecked(m, rho, t).d1.hypot(1.0),
        a,
        b,
        QUAD_REL,
        0.0,
    )
    .value
}

fn segment_samples(a: PlanarPoint, b: PlanarPoint, n: usize, out: &mut Vec<PlanarPoint>) {
    for i in 1..n {
        let s = i as f64 / n as f64;
        out.push(PlanarPoint::new(a.x1 + s * (b.x1 - a.x1), a.x2 + s * (b.x2 - a.x2)));
    }
}

/// Builds `nu` with about `samples_per_unit` vertices per unit length. Arc
/// nodes combine a uniform grid in `t` with a grid uniform in the slope
/// `f_rho'`, which resolves the high-curvature part near `t0`.
pub fn build_nu(problem: &SublevelProblem, samples_per_unit: f64) -> Result<NuCurve> {
    let params = &problem.params;
    let rho = problem.rho;
    let m = params.m();
    let a0 = PlanarPoint::ORIGIN;
    let a_eps = params.a_eps();
    let (t0, t1) = tangency_params(params, rho)?;
    let count = |len: f64| ((len * samples_per_unit).ceil() as usize).max(1);
    if t0 == 0.0 && t1 == 0.0 {
        let len = a_eps.norm();
        let mut v = vec![a0];
        segment_samples(a0, a_eps, count(len), &mut v);
        v.push(a_eps);
        return Ok(NuCurve {
            t0,
            t1,
            polyline: Polyline::open(v)?,
            segment_lengths: (len, 0.0, 0.0),
        });
    }
    let g0 = gamma_rho(params, rho, t0);
    let g1 = gamma_rho(params, rho, t1);
    let l1 = (t0 * t0 + ipow(t0, m) + rho).sqrt();
    let l2 = level_arc_length(params, rho, t0, t1);
    let l3 = g1.dist(&a_eps);

    let mut v = vec![a0];
    segment_samples(a0, g0, count(l1), &mut v);
    let n_arc = count(l2).max(64);
    let mut ts: Vec<f64> = (0..=n_arc)
        .map(|i| t0 + (t1 - t0) * i as f64 / n_arc as f64)
        .collect();
    let (k0, k1) = (
        f_rho_unchecked(m, rho, t0).d1,
        f_rho_unchecked(m, rho, t1).d1,
    );
    for i in 1..n_arc {
        let target = k0 + (k1 - k0) * i as f64 / n_arc as f64;
        let (mut lo, mut hi) = (t0, t1);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f_rho_unchecked(m, rho, mid).d1 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ts.push(0.5 * (lo + hi));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t1);
    if let Some(last) = ts.last_mut() {
        *last = t1;
    }
    ts[0] = t0;
    v.extend(ts.iter().map(|&t| gamma_rho(params, rho, t)));
    segment_samples(g1, a_eps, count(l3), &mut v);
    v.push(a_eps);
    Ok(NuCurve {
        t0,
        t1,
        polyline: Polyline::open(v)?,
        segment_lengths: (l1, l2, l3),
    })
}

/// `int_a^b u / (sqrt(1 + u) + 1) dt` with `u = mbar^2 t^(m-2)`, i.e. the
/// excess of the candidate's length over the `x2` span.
fn candidate_excess(params: &StructureParams, a: f64, b: f64) -> f64 {
    let m = params.m();
    let mb2 = params.mbar() * params.mbar();
    if b <= a {
        return 0.0;
    }
    integrate_adaptive(
        |t| {
            let u = mb2 * ipow(t, m - 2);
            u / ((1.0 + u).sqrt() + 1.0)
        },
        a,
        b,
        QUAD_REL,
        0.0,
    )
    .value
}

/// `L(omega_bar) - L(nu)`, assembled from three differences that are each
/// evaluated without cancellation.
pub fn length_gap(params: &StructureParams, rho: f64) -> Result<f64> {
    let (t0, t1) = tangency_params(params, rho)?;
    let eps = params.epsilon();
    let m = params.m();
    let mbar = params.mbar();
    if t0 == 0.0 && t1 == 0.0 {
        let chord = params.a_eps().norm();
        let excess_chord = ipow(params.pow_mbar(eps), 2) / (chord + eps);
        return Ok(candidate_excess(params, 0.0, eps) - excess_chord);
    }
    let l1 = (t0 * t0 + ipow(t0, m) + rho).sqrt();
    let piece1 = candidate_excess(params, 0.0, t0) - mbar * ipow(t0, m) / (l1 + t0);
    let mb2 = mbar * mbar;
    let middle = integrate_adaptive(
        |t| {
            let f = f_rho_unchecked(m, rho, t);
            let gb = mbar * t.powf(mbar - 1.0);
            mb2 * ipow(t, m - 2) * rho / (ipow(t, m) + rho)
                / (gb.hypot(1.0) + f.d1.hypot(1.0))
        },
        t0,
        t1,
        QUAD_REL,
        0.0,
    )
    .value;
    let s1 = f_rho_unchecked(m, rho, t1).d1;
    let piece3 =
        candidate_excess(params, t1, eps) - (eps - t1) * s1 * s1 / (s1.hypot(1.0) + 1.0);
    Ok(piece1 + middle + piece3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub rho: f64,
    pub gap: f64,
    pub ratio: f64,
    pub length_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// Largest `gap / rho^(1-1/m)` over the grid.
    pub fitted_c: f64,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// Whether the ratio stays within a factor 3 over the grid.
    pub bounded: bool,
    pub margins: Vec<LowerBoundRow>,
}

/// Tabulates `gap(rho) = L(omega_bar) - L(nu)` against `rho^(1-1/m)`.
pub fn check_lower_bound(problem: &SublevelProblem, rho_grid: &[f64]) -> Result<LowerBoundReport> {
    let params = &problem.params;
    let limit = regime_limit(params, problem.k);
    let bad: Vec<f64> = rho_grid
        .iter()
        .copied()
        .filter(|&r| !(r > 0.0 && r < limit))
        .collect();
    if !bad.is_empty() {
        return Err(Error::RegimeViolation(bad));
    }
    if rho_grid.is_empty() {
        return Err(Error::InvalidParameter("empty rho grid".into()));
    }
    let expo = 1.0 - 1.0 / f64::from(params.m());
    let l_bar = length_bar_omega(params).l;
    let mut margins = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let gap = length_gap(params, rho)?;
        margins.push(LowerBoundRow {
            rho,
            gap,
            ratio: gap / rho.powf(expo),
            length_nu: l_bar - gap,
        });
    }
    let max = margins.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = margins.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    Ok(LowerBoundReport {
        fitted_c: max,
        spread,
        bounded: min > 0.0 && spread <= 3.0,
        margins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordArcReport {
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Arc minus chord of `Gamma_rho` over `[t, s]` against
/// `(mbar^2/2)(mbar-1) s^(m-3) (s-t)^2`.
pub fn chord_arc_gap(params: &StructureParams, rho: f64, t: f64, s: f64) -> Result<ChordArcReport> {
    if !(s >= t && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need s >= t >= 0 (t = {t}, s = {s})")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    let m = params.m();
    let mbar = params.mbar();
    let bound = 0.5 * mbar * mbar * (mbar - 1.0) * ipow(s, m - 3) * (s - t) * (s - t);
    if s == t {
        return Ok(ChordArcReport {
            gap: 0.0,
            bound,
            holds: true,
        });
    }
    let (ft, fs) = (f_rho_unchecked(m, rho, t).value, f_rho_unchecked(m, rho, s).value);
    let sigma = (fs - ft) / (s - t);
    let root_sigma = sigma.hypot(1.0);
    // sqrt(1+f'^2) - sqrt(1+sigma^2) = (f' - sigma)(f' + sigma) / (sum of roots)
    let gap = integrate_adaptive(
        |x| {
            let d = f_rho_unchecked(m, rho, x).d1;
            (d - sigma) * (d + sigma) / (d.hypot(1.0) + root_sigma)
        },
        t,
        s,
        1e-12,
        1e-300,
    )
    .value;
    Ok(ChordArcReport {
        gap,
        bound,
        holds: gap <= bound * (1.0 + 1e-8),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthExpansion {
    #[serde(rename = "L")]
    pub l: f64,
    /// `eps + mbar^2 eps^(m-1) / (2(m-1))`.
    pub expansion: f64,
    /// `L - expansion`, evaluated directly (not by subtraction).
    pub residual: f64,
}

/// Length of the candidate `omega_bar` over `[0, eps]` and its two-term
/// expansion.
pub fn length_bar_omega(params: &StructureParams) -> LengthExpansion {
    let eps = params.epsilon();
    let m = params.m();
    let mbar = params.mbar();
    let mb2 = mbar * mbar;
    let excess = candidate_excess(params, 0.0, eps);
    let expansion_term = mb2 * ipow(eps, m - 1) / (2.0 * f64::from(m - 1));
    // u/(sqrt(1+u)+1) - u/2 = -u^2 / (2 (sqrt(1+u)+1)^2)
    let residual = -integrate_adaptive(
        |t| {
            let u = mb2 * ipow(t, m - 2);
            let d = (1.0 + u).sqrt() + 1.0;
            u * u / (2.0 * d * d)
        },
        0.0,
        eps,
        QUAD_REL,
        0.0,
    )
    .value;
    LengthExpansion {
        l: eps + excess,
        expansion: eps + expansion_term,
        residual,
    }
}

/// Fixed-order Gauss–Legendre length of `omega_bar` on `[0, t]`, used where
/// many evaluations on short intervals are needed.
pub(crate) fn candidate_arclength(params: &StructureParams, rule: &GaussLegendre, t: f64) -> f64 {
    let m = params.m();
    let mb2 = params.mbar() * params.mbar();
    t + rule.integrate(0.0, t, |x| {
        let u = mb2 * ipow(x, m - 2);
        u / ((1.0 + u).sqrt() + 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> StructureParams {
        StructureParams::new(5, 0.1).unwrap()
    }

    #[test]
    fn f_rho_values() {
        let s = p5();
        let f = f_rho(&s, 1e-6, 0.0).unwrap();
        assert_eq!(f.value, 1e-3);
        assert_eq!(f.d1, 0.0);
        let f = f_rho(&s, 1e-6, 0.1).unwrap();
        assert!((f.value - 1.1e-5_f64.sqrt()).abs() < 1e-18);
        let f = f_rho(&s, 1e-300, 1.0).unwrap();
        assert!((f.value - 1.0).abs() < 1e-15 && (f.d1 - 2.5).abs() < 1e-14);
        assert!(f_rho(&s, 1e-6, -1e-3).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = p5();
        for &(rho, t) in &[(1e-6, 0.05), (1e-9, 0.01), (1e-4, 0.2)] {
            let h = 1e-6 * t;
            let f = |x: f64| f_rho(&s, rho, x).unwrap();
            let d1 = (f(t + h).value - f(t - h).value) / (2.0 * h);
            let d2 = (f(t + h).d1 - f(t - h).d1) / (2.0 * h);
            assert!((d1 - f(t).d1).abs() <= 1e-7 * f(t).d1.abs());
            assert!((d2 - f(t).d2).abs() <= 1e-6 * f(t).d2.abs());
        }
    }

    #[test]
    fn classical_second_derivative_bound_fails_but_sharp_one_holds() {
        let s = p5();
        let t: f64 = 0.1;
        let rho = 7.0 / 8.0 * ipow(t, 5);
        let f = f_rho(&s, rho, t).unwrap();
        let w = t.powf(s.mbar() - 2.0);
        assert!(f.d2 > d2_classical_constant(&s) * w);
        assert!(f.d2 <= d2_sharp_constant(&s) * w * (1.0 + 1e-12));
        assert!((d2_sharp_constant(&s) / d2_classical_constant(&s) - 1.298).abs() < 1e-3);
    }

    #[test]
    fn t0_closed_form() {
        let s = p5();
        assert!((tangency_t0(&s, 1.5e-5) - 0.1).abs() < 1e-15);
        // At eps = 0.1 the tangency point sits at eps: the chord misses.
        assert_eq!(tangency_params(&s, 1.5e-5).unwrap(), (0.0, 0.0));
        let (t0, t1) = tangency_params(&s.with_epsilon(0.2).unwrap(), 1.5e-5).unwrap();
        assert!((t0 - 0.1).abs() < 1e-15 && t1 > t0 && t1 < 0.2);
        let (t0, t1) = tangency_params(&s, 1e-9).unwrap();
        assert!(t0 > 0.0 && t0 < t1 && t1 < 0.1);
        let f0 = f_rho(&s, 1e-9, t0).unwrap();
        assert!((f0.value - t0 * f0.d1).abs() <= 1e-14 * f0.value);
    }

    #[test]
    fn huge_rho_gives_the_chord() {
        let s = p5();
        assert_eq!(tangency_params(&s, 1.0).unwrap(), (0.0, 0.0));
        let nu = build_nu(&SublevelProblem::new(s, 1.0, 1.0).unwrap(), 1e3).unwrap();
        assert!((nu.length() - s.a_eps().norm()).abs() < 1e-16);
        assert!((nu.polyline.length() - s.a_eps().norm()).abs() < 1e-15);
    }

    #[test]
    fn nu_pieces_and_gap_agree() {
        let s = p5();
        let rho = 1e-9;
        let nu = build_nu(&SublevelProblem::new(s, rho, 1.0).unwrap(), 1e5).unwrap();
        let l_bar = length_bar_omega(&s).l;
        let gap = length_gap(&s, rho).unwrap();
        assert!(gap > 0.0);
        assert!(((l_bar - nu.length()) - gap).abs() < 1e-15, "{} vs {gap}", l_bar - nu.length());
        assert!(nu.polyline.length() <= nu.length());
        assert!(nu.length() - nu.polyline.length() < 1e-11);
        let max_p = nu
            .polyline
            .vertices()
            .iter()
            .map(|&v| s.p(v))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_p <= rho * (1.0 + 1e-10), "{max_p}");
    }

    #[test]
    fn chord_arc_degenerate_and_sample() {
        let s = p5();
        let r = chord_arc_gap(&s, 1e-6, 0.07, 0.07).unwrap();
        assert_eq!((r.gap, r.bound, r.holds), (0.0, 0.0, true));
        let r = chord_arc_gap(&s, 1e-6, 0.05, 0.1).unwrap();
        assert!(r.holds && r.gap > 0.0 && r.gap < r.bound);
        assert!(chord_arc_gap(&s, 1e-6, 0.1, 0.05).is_err());
    }

    #[test]
    fn expansion() {
        let r = length_bar_omega(&p5());
        assert!((r.expansion - 0.100078125).abs() < 1e-17);
        assert!(r.residual < 0.0 && r.residual.abs() < 1e-6);
        assert!((r.l - r.expansion - r.residual).abs() < 1e-16);
    }

    #[test]
    fn regime_is_checked() {
        let s = p5();
        let p = SublevelProblem::new(s, 1e-9, 1.0).unwrap();
        assert!(p.regime_ok);
        assert!(matches!(
            check_lower_bound(&p, &[1e-9, 1e-3]),
            Err(Error::RegimeViolation(v)) if v == vec![1e-3]
        ));
    }
}
