//! Randomized check that `nu` is not shortened by admissible perturbations.

use super::sublevel::{build_nu, SublevelProblem};
use crate::error::{Error, Result};
use crate::numeric::ipow;
use crate::structure::PlanarPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOptions {
    pub n_trials: usize,
    /// Displacement amplitude (both coordinates).
    pub amplitude: f64,
    pub seed: u64,
    /// Project displaced vertices back into `{P <= rho}`; without it,
    /// inadmissible competitors are only counted.
    pub project: bool,
    pub samples_per_unit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `min (L(competitor) - L(nu))` over admissible competitors.
    pub min_excess: f64,
    pub all_nonneg: bool,
    pub admissible: usize,
    pub projection_failures: usize,
    pub inadmissible: usize,
}

enum Trial {
    Excess(f64),
    ProjectionFailure,
    Inadmissible,
}

/// Perturbs the interior vertices of `nu` by random smooth fields (a few
/// sine modes under a `sin^2` envelope vanishing at both ends), moves points
/// with `P > rho` horizontally back onto `{P = rho}`, and compares lengths
/// with the polyline of `nu` itself.
pub fn perturbation_test(problem: &SublevelProblem, opts: &PerturbationOptions) -> Result<PerturbationReport> {
    if opts.n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be >= 1".into()));
    }
    let nu = build_nu(problem, opts.samples_per_unit)?;
    let base = nu.polyline.vertices();
    let cum = nu.polyline.cum_arclength();
    let total = nu.polyline.length();
    let base_len: f64 = base.windows(2).map(|w| w[0].dist(&w[1])).sum();
    let params = problem.params;
    let rho = problem.rho;
    let m = params.m();

    let trials: Vec<Trial> = (0..opts.n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(trial as u64));
            let mut coef = [[0.0; 2]; MODES];
            for c in &mut coef {
                c[0] = rng.random_range(-1.0..1.0);
                c[1] = rng.random_range(-1.0..1.0);
            }
            let mut v = base.to_vec();
            let last = v.len() - 1;
            let mut projected = false;
            for i in 1..last {
                let u = cum[i] / total;
                let env = (PI * u).sin().powi(2);
                let (mut d1, mut d2) = (0.0, 0.0);
                for (j, c) in coef.iter().enumerate() {
                    let w = ((j + 1) as f64 * PI * u).sin();
                    d1 += c[0] * w;
                    d2 += c[1] * w;
                }
                let mut p = PlanarPoint::new(
                    v[i].x1 + opts.amplitude * env * d1 / MODES as f64,
                    v[i].x2 + opts.amplitude * env * d2 / MODES as f64,
                );
                if params.p(p) > rho {
                    if !opts.project {
                        return Trial::Inadmissible;
                    }
                    let r = ipow(p.x2, m) + rho;
                    if r <= 0.0 {
                        return Trial::ProjectionFailure;
                    }
                    p.x1 = r.sqrt();
                    projected = true;
                }
                if !(p.x1 > 0.0) {
                    return if projected || opts.project {
                        Trial::ProjectionFailure
                    } else {
                        Trial::Inadmissible
                    };
                }
                v[i] = p;
            }
            let len: f64 = v.windows(2).map(|w| w[0].dist(&w[1])).sum();
            Trial::Excess(len - base_len)
        })
        .collect();

    let mut report = PerturbationReport {
        min_excess: f64::INFINITY,
        all_nonneg: true,
        admissible: 0,
        projection_failures: 0,
        inadmissible: 0,
    };
    for t in trials {
        match t {
            Trial::Excess(e) => {
                report.admissible += 1;
                report.min_excess = report.min_excess.min(e);
            }
            Trial::ProjectionFailure => report.projection_failures += 1,
            Trial::Inadmissible => report.inadmissible += 1,
        }
    }
    report.all_nonneg = report.admissible > 0 && report.min_excess >= -1e-8;
    Ok(report)
}
