//! Finite-difference probe of the regularity of the candidate's arclength
//! parametrization at its singular endpoint.
//!
//! For `x1(s)` near `s = 0`, the `k`-th forward difference over the stencil
//! `h, 2h, ..., (k+1)h` divided by `h^k` behaves like `h^(mbar-k)`; the fitted
//! log-log slope is the local Hölder exponent of the `(k-1)`-th derivative.

use super::sublevel::candidate_arclength;
use crate::error::{Error, Result};
use crate::numeric::ipow;
use crate::quadrature::GaussLegendre;
use crate::structure::StructureParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub h: f64,
    /// `Delta^k / h^k` over the stencil `h, ..., (k+1)h`.
    pub centered: f64,
    /// Same over the one-sided stencil `0, h, ..., kh`.
    pub one_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub k: u32,
    pub exponents: Vec<ProbeRow>,
    pub fitted_alpha: f64,
    pub fitted_alpha_one_sided: f64,
}

/// `x1` as a function of arclength along the candidate: `s(t)` inverted by
/// Newton, then `x1 = t^mbar`.
pub fn x1_of_arclength(params: &StructureParams, rule: &GaussLegendre, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let m = params.m();
    let mb2 = params.mbar() * params.mbar();
    let mut t = s;
    for _ in 0..50 {
        let r = candidate_arclength(params, rule, t) - s;
        let speed = (1.0 + mb2 * ipow(t, m - 2)).sqrt();
        let dt = r / speed;
        t -= dt;
        if dt.abs() <= 1e-17 * t {
            break;
        }
    }
    params.pow_mbar(t)
}

fn binomial(k: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * f64::from(k - i) / f64::from(i + 1))
}

fn forward_difference<F: Fn(f64) -> f64>(f: &F, start: f64, h: f64, k: u32) -> (f64, f64) {
    let mut sum = 0.0;
    let mut scale = 0.0_f64;
    for j in 0..=k {
        let v = f(start + f64::from(j) * h);
        let c = binomial(k, j) * if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        sum += c * v;
        scale = scale.max(v.abs());
    }
    (sum, scale)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits the scaling of `k`-th differences of an arbitrary function near 0.
pub fn probe_function<F: Fn(f64) -> f64>(f: F, k: u32, scale_grid: &[f64]) -> Result<RegularityReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
    }
    if scale_grid.len() < 2 {
        return Err(Error::InvalidParameter("scale grid needs at least two points".into()));
    }
    if let Some(&h) = scale_grid.iter().find(|&&h| !(1e-8..=1e-2).contains(&h)) {
        return Err(Error::InvalidParameter(format!("scale {h:e} outside [1e-8, 1e-2]")));
    }
    let mut rows = Vec::with_capacity(scale_grid.len());
    for &h in scale_grid {
        let (c, sc) = forward_difference(&f, h, h, k);
        let (o, so) = forward_difference(&f, 0.0, h, k);
        for (d, s) in [(c, sc), (o, so)] {
            if d.abs() < 1e3 * f64::EPSILON * s {
                return Err(Error::NoiseFloor(h));
            }
        }
        let hk = h.powi(k as i32);
        rows.push(ProbeRow {
            h,
            centered: c / hk,
            one_sided: o / hk,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
    let lc: Vec<f64> = rows.iter().map(|r| r.centered.abs().ln()).collect();
    let lo: Vec<f64> = rows.iter().map(|r| r.one_sided.abs().ln()).collect();
    Ok(RegularityReport {
        k,
        fitted_alpha: slope(&lx, &lc),
        fitted_alpha_one_sided: slope(&lx, &lo),
        exponents: rows,
    })
}

/// Probe of `x1(s)` along the arclength-parametrized candidate.
pub fn regularity_probe(params: &StructureParams, k: u32, scale_grid: &[f64]) -> Result<RegularityReport> {
    let k_max = (params.mbar() + 1.5).ceil() as u32;
    if k == 0 || k > k_max {
        return Err(Error::InvalidParameter(format!("derivative order {k} not in 1..={k_max}")));
    }
    let rule = GaussLegendre::new(24);
    probe_function(|s| x1_of_arclength(params, &rule, s), k, scale_grid)
}

/// `n` log-spaced scales between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 5), 1.0);
    }

    #[test]
    fn polynomial_differences_are_exact() {
        let (d, _) = forward_difference(&|x: f64| x * x * x, 1.0, 0.5, 3);
        assert!((d - 6.0 * 0.125).abs() < 1e-14);
    }

    #[test]
    fn arclength_inverse_near_zero() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let rule = GaussLegendre::new(24);
        let x = x1_of_arclength(&s, &rule, 1e-4);
        // s = t + O(t^4) so x1 ~ s^(5/2) to high relative accuracy.
        assert!((x / 1e-10 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn candidate_second_difference() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let r = regularity_probe(&s, 2, &log_grid(1e-6, 1e-3, 7)).unwrap();
        assert!((r.fitted_alpha - 0.5).abs() < 0.05, "{}", r.fitted_alpha);
        assert!(regularity_probe(&s, 9, &[1e-4, 1e-3]).is_err());
        assert!(regularity_probe(&s, 2, &[1e-4, 1.0]).is_err());
    }
}
