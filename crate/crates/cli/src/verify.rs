//! Fast invariant suite behind `mlab verify`.

use mlab_core::geometry::{gauss_bonnet_audit, isoperimetric_check, weighted_area_grid, weighted_area_line};
use mlab_core::varcalc::length_bar_omega;
use mlab_core::{PlanarPoint, Polyline, StructureParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::run::appendix_checks;
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub m: u32,
    pub epsilon: f64,
    pub rng_seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn star_ring(rng: &mut ChaCha8Rng, n: usize) -> Polyline {
    let cx = rng.random_range(0.6..1.4);
    let cy = rng.random_range(-0.6..0.6);
    let r0 = rng.random_range(0.2..0.5);
    let verts = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            let r = r0 * rng.random_range(0.6..1.0);
            PlanarPoint::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    Polyline::closed_ring(verts).expect("star rings are valid")
}

fn regular_polygon(n: usize) -> Polyline {
    let v = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            PlanarPoint::new(1.0 + 0.5 * a.cos(), 0.5 * a.sin())
        })
        .collect();
    Polyline::closed_ring(v).expect("polygon is valid")
}

pub fn verify(params: &StructureParams, rng_seed: u64) -> Result<VerifyReport, Failure> {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.into(),
            passed,
            detail,
        })
    };

    let eps = params.epsilon();
    let scaled: Vec<f64> = [eps, eps / 2.0, eps / 4.0]
        .iter()
        .map(|&e| {
            let p = params.with_epsilon(e)?;
            Ok(length_bar_omega(&p).residual.abs() / e.powi(params.m() as i32 - 1))
        })
        .collect::<Result<_, mlab_core::Error>>()?;
    push(
        "length_expansion",
        scaled.windows(2).all(|w| w[1] < w[0]),
        format!("|residual|/eps^(m-1) at eps, eps/2, eps/4: {scaled:?}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rings: Vec<Polyline> = (0..20).map(|i| star_ring(&mut rng, 6 + i)).collect();
    rings.push(Polyline::closed_ring(vec![
        PlanarPoint::new(0.0, 0.0),
        PlanarPoint::new(1.0, 0.0),
        PlanarPoint::new(1.0, 1.0),
        PlanarPoint::new(0.0, 1.0),
    ])?);
    let (mut stokes_bad, mut iso_bad) = (0, 0);
    for r in &rings {
        let line = weighted_area_line(params, r)?.value;
        let grid = weighted_area_grid(params, r, 128)?;
        if (line - grid.value).abs() > grid.estimated_error {
            stokes_bad += 1;
        }
        if !isoperimetric_check(params, r)?.holds {
            iso_bad += 1;
        }
    }
    push(
        "stokes",
        stokes_bad == 0,
        format!("{stokes_bad} of {} rings outside the grid error estimate", rings.len()),
    );
    push(
        "isoperimetric",
        iso_bad == 0,
        format!("{iso_bad} of {} rings violate 4 pi |A| <= L^2", rings.len()),
    );

    let gb = gauss_bonnet_audit(&regular_polygon(1000), &[])?;
    push(
        "gauss_bonnet",
        gb.residual().abs() <= 1e-6,
        format!("residual {:e} on a 1000-gon", gb.residual()),
    );

    let regime = eps.powf(3.0 * params.mbar() - 1.0);
    let rhos: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6].iter().map(|d| d * regime).collect();
    let (rec, fails) = appendix_checks(params, &rhos, 1.0, rng_seed, 200);
    let worst = rec.tangency.iter().map(|r| r.residual).fold(0.0, f64::max);
    push(
        "tangency",
        !fails.iter().any(|f| f.message.contains("tangency")) && rec.tangency.len() == rhos.len(),
        format!("worst residual {worst:e} eps^mbar (tol {:e})", rec.tangency_tol),
    );
    push(
        "chord_arc",
        rec.chord_arc.violations == 0,
        format!(
            "{} violations in {} cases; worst gap/bound {:.3}",
            rec.chord_arc.violations, rec.chord_arc.cases, rec.chord_arc.worst_ratio
        ),
    );
    if let Some(p) = &rec.perturbation {
        push(
            "perturbation",
            p.report.min_excess >= -p.slack,
            format!(
                "min excess {:e} over {} admissible competitors",
                p.report.min_excess, p.report.admissible
            ),
        );
    }
    let other: Vec<String> = fails
        .iter()
        .filter(|f| !f.message.contains("tangency") && !f.message.contains("chord-arc") && !f.message.contains("perturbation"))
        .map(|f| f.message.clone())
        .collect();
    if !other.is_empty() {
        return Err(Failure::numerical(other.join("; ")));
    }

    Ok(VerifyReport {
        m: params.m(),
        epsilon: eps,
        rng_seed,
        checks,
    })
}
