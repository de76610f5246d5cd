use mlab_core::extremal::{diagnostics, DiagnosticsReport};
use mlab_core::geometry::{close_through_candidate, isoperimetric_check};
use mlab_core::shooting::{solve_bvp, SeedGrid, SolutionRecord};
use mlab_core::varcalc::{
    build_nu, chord_arc_gap, check_lower_bound, f_rho, length_bar_omega, perturbation_test,
    tangency_params, LengthExpansion, LowerBoundReport, PerturbationOptions, PerturbationReport,
    SublevelProblem,
};
use mlab_core::varcalc::sublevel::gamma_rho;
use mlab_core::{PlanarPoint, StructureParams};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use crate::config::{ExperimentConfig, RhoPolicy};
use crate::plot::{plot_scene, Scene, SceneCurve};
use crate::{write_json, Failure, FailureKind};

/// Relative tolerance of the candidate-length quadrature.
pub const QUAD_REL_TOL: f64 = 1e-14;
/// Tangency residuals are solved to this multiple of `eps^mbar`.
pub const TANGENCY_TOL: f64 = 1e-14;
/// Competitors may undercut `nu` by at most this much (rounding slack).
pub const PERTURBATION_SLACK: f64 = 1e-8;
/// Converged shooting solutions may undercut the candidate by at most this
/// multiple of `eps`.
pub const LENGTH_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub length: LengthExpansion,
    pub quad_rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingRecord {
    pub solver_tol: f64,
    pub integration_tol: f64,
    pub seeds: usize,
    pub attempts_with_trace: usize,
    pub converged: usize,
    /// Smallest residual norm reached by any attempt.
    pub best_norm: Option<f64>,
    pub solutions: Vec<SolutionRecord>,
    pub diagnostics: Vec<DiagnosticsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyRow {
    pub rho: f64,
    pub t0: f64,
    pub t1: f64,
    /// `max(|f(t0) - t0 f'(t0)|, |f(t1) + f'(t1)(eps - t1) - eps^mbar|) / eps^mbar`.
    pub residual: f64,
    pub length_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordArcSummary {
    pub cases: usize,
    pub violations: usize,
    /// Largest `gap / bound` over the grid.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub rho: f64,
    pub options: PerturbationOptions,
    pub report: PerturbationReport,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixRecord {
    pub rhos: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub tangency_tol: f64,
    pub tangency: Vec<TangencyRow>,
    pub lower_bound: Option<LowerBoundReport>,
    pub chord_arc: ChordArcSummary,
    pub perturbation: Option<PerturbationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRecord {
    pub epsilon: f64,
    pub candidate: CandidateRecord,
    pub shooting: Option<ShootingRecord>,
    pub appendix: Option<AppendixRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub epsilon: Option<f64>,
    pub kind: String,
    pub message: String,
}

/// Reproducible part of a run. Wall-clock lives in `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub stages: Vec<EpsRecord>,
    pub failures: Vec<FailureRecord>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        let kinds: Vec<Failure> = self
            .failures
            .iter()
            .map(|f| Failure {
                kind: match f.kind.as_str() {
                    "invariant" => FailureKind::Invariant,
                    "config" => FailureKind::Config,
                    _ => FailureKind::Numerical,
                },
                message: f.message.clone(),
            })
            .collect();
        crate::exit_code(&kinds)
    }
}

fn record(eps: Option<f64>, f: &Failure) -> FailureRecord {
    FailureRecord {
        epsilon: eps,
        kind: match f.kind {
            FailureKind::Invariant => "invariant",
            FailureKind::Config => "config",
            FailureKind::Numerical => "numerical",
        }
        .into(),
        message: f.message.clone(),
    }
}

pub fn candidate_record(params: &StructureParams) -> CandidateRecord {
    CandidateRecord {
        length: length_bar_omega(params),
        quad_rel_tol: QUAD_REL_TOL,
    }
}

/// Tangency, chord-arc, lower-bound and perturbation checks at the given
/// `rho` values. Hard violations are returned alongside the record.
pub fn appendix_checks(
    params: &StructureParams,
    rhos: &[f64],
    k: f64,
    rng_seed: u64,
    perturbation_trials: usize,
) -> (AppendixRecord, Vec<Failure>) {
    let eps = params.epsilon();
    let em = params.pow_mbar(eps);
    let mut failures = Vec::new();

    let mut tangency = Vec::new();
    for &rho in rhos {
        let row = (|| -> Result<TangencyRow, Failure> {
            let (t0, t1) = tangency_params(params, rho)?;
            let residual = if t0 == 0.0 {
                0.0
            } else {
                let f0 = f_rho(params, rho, t0)?;
                let f1 = f_rho(params, rho, t1)?;
                ((f0.value - t0 * f0.d1).abs() / em).max((f1.value + f1.d1 * (eps - t1) - em).abs() / em)
            };
            let nu = build_nu(&SublevelProblem::new(*params, rho, k)?, 2e3)?;
            Ok(TangencyRow {
                rho,
                t0,
                t1,
                residual,
                length_nu: nu.length(),
            })
        })();
        match row {
            Ok(r) => {
                if r.residual > TANGENCY_TOL {
                    failures.push(Failure::invariant(format!(
                        "tangency residual {:e} eps^mbar at rho = {rho:e}",
                        r.residual
                    )));
                }
                tangency.push(r);
            }
            Err(e) => failures.push(e),
        }
    }

    let mut chord_arc = ChordArcSummary {
        cases: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    const N: u32 = 10;
    for &rho in rhos {
        for i in 0..=N {
            for j in i..=N {
                let (t, s) = (eps * f64::from(i) / f64::from(N), eps * f64::from(j) / f64::from(N));
                match chord_arc_gap(params, rho, t, s) {
                    Ok(r) => {
                        chord_arc.cases += 1;
                        if r.bound > 0.0 {
                            chord_arc.worst_ratio = chord_arc.worst_ratio.max(r.gap / r.bound);
                        }
                        if !r.holds {
                            chord_arc.violations += 1;
                        }
                    }
                    Err(e) => failures.push(e.into()),
                }
            }
        }
    }
    if chord_arc.violations > 0 {
        failures.push(Failure::invariant(format!(
            "chord-arc inequality fails in {} of {} cases",
            chord_arc.violations, chord_arc.cases
        )));
    }

    let in_regime: Vec<f64> = rhos
        .iter()
        .copied()
        .filter(|&r| r < mlab_core::varcalc::sublevel::regime_limit(params, k))
        .collect();
    let lower_bound = match in_regime.first() {
        None => None,
        Some(&r0) => match SublevelProblem::new(*params, r0, k).and_then(|p| check_lower_bound(&p, &in_regime)) {
            Ok(r) => Some(r),
            Err(e) => {
                failures.push(e.into());
                None
            }
        },
    };

    let perturbation = in_regime
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
        .filter(|_| perturbation_trials > 0)
        .and_then(|rho| {
            let options = PerturbationOptions {
                n_trials: perturbation_trials,
                amplitude: 1e-5,
                seed: rng_seed,
                project: true,
                samples_per_unit: 2e4,
            };
            let r = SublevelProblem::new(*params, rho, k).and_then(|p| perturbation_test(&p, &options));
            match r {
                Ok(report) => {
                    if report.min_excess < -PERTURBATION_SLACK {
                        failures.push(Failure::invariant(format!(
                            "perturbation shortened nu by {:e}",
                            -report.min_excess
                        )));
                    }
                    Some(PerturbationRecord {
                        rho,
                        options,
                        report,
                        slack: PERTURBATION_SLACK,
                    })
                }
                Err(e) => {
                    failures.push(e.into());
                    None
                }
            }
        });

    (
        AppendixRecord {
            rhos: rhos.to_vec(),
            k,
            tangency_tol: TANGENCY_TOL,
            tangency,
            lower_bound,
            chord_arc,
            perturbation,
        },
        failures,
    )
}

/// Shooting from the seed grid around the candidate, with diagnostics and
/// the hard checks on every converged solution.
pub fn shooting_record(
    params: &StructureParams,
    cfg: &ExperimentConfig,
) -> Result<(ShootingRecord, Vec<mlab_core::shooting::ShootingSolution>, Vec<Failure>), Failure> {
    let [a, b, c] = cfg.solver.seed_grid;
    let seeds = SeedGrid::around_candidate(params, a, b, c).seeds(-1)?;
    let opts = cfg.solver_options(params);
    let out = solve_bvp(params, &seeds, &opts)?;
    let l_bar = length_bar_omega(params).l;
    let eps = params.epsilon();
    let mut failures = Vec::new();
    let mut diags = Vec::new();
    for s in &out.solutions {
        if s.length < l_bar - LENGTH_SLACK * eps {
            failures.push(Failure::invariant(format!(
                "converged solution of length {} is shorter than the candidate ({l_bar})",
                s.length
            )));
        }
        let d = diagnostics(params, &s.trajectory)?;
        let closed = s.trajectory.to_polyline().and_then(|p| close_through_candidate(params, &p, 400));
        if let Ok(c) = closed {
            if let Ok(chk) = isoperimetric_check(params, &c) {
                if !chk.holds {
                    failures.push(Failure::invariant(format!(
                        "isoperimetric inequality fails on a converged extremal: {:e} > {:e}",
                        chk.lhs, chk.rhs
                    )));
                }
            }
        }
        diags.push(d);
    }
    let best_norm = out
        .attempts
        .iter()
        .map(|a| a.best_norm)
        .filter(|n| n.is_finite())
        .fold(None, |acc: Option<f64>, n| Some(acc.map_or(n, |a| a.min(n))));
    let record = ShootingRecord {
        solver_tol: opts.tol,
        integration_tol: opts.integration_tol,
        seeds: seeds.len(),
        attempts_with_trace: out.attempts.iter().filter(|a| !a.trace.is_empty()).count(),
        converged: out.solutions.len(),
        best_norm,
        solutions: out
            .solutions
            .iter()
            .enumerate()
            .map(|(i, s)| SolutionRecord::new(params, s, Some(format!("diagnostics[{i}]"))))
            .collect(),
        diagnostics: diags,
    };
    Ok((record, out.solutions, failures))
}

/// Scene with the candidate, the chord and (if given) `nu` with its level
/// curve and converged extremals with their loops highlighted.
pub fn scene(
    params: &StructureParams,
    rho: Option<f64>,
    extremals: &[(&mlab_core::ExtremalTrajectory, &DiagnosticsReport)],
) -> Result<Scene, Failure> {
    let eps = params.epsilon();
    let mut sc = Scene::new(format!("m = {}, eps = {eps}", params.m()), eps, params.mbar());
    sc.curves.push(SceneCurve::new("candidate", params.omega_bar_samples(0.0, eps, 400), "black"));
    sc.curves
        .push(SceneCurve::new("chord", vec![PlanarPoint::ORIGIN, params.a_eps()], "#999").dashed());
    sc.x1_tick(params.pow_mbar(eps), "eps^(m/2)");
    sc.x2_tick(eps, "eps");
    if let Some(rho) = rho {
        let level: Vec<PlanarPoint> = (0..=400)
            .map(|i| gamma_rho(params, rho, eps * f64::from(i) / 400.0))
            .collect();
        sc.curves.push(SceneCurve::new("{P = rho}", level, "#4a7").dashed());
        let nu = build_nu(&SublevelProblem::new(*params, rho, 1.0)?, 2e3)?;
        sc.curves
            .push(SceneCurve::new("nu", nu.polyline.vertices().to_vec(), "#c22").with_width(2.0));
        sc.x1_tick(rho.sqrt(), "rho^(1/2)");
    }
    for (i, (tr, d)) in extremals.iter().enumerate() {
        let n = 800;
        let pts = (0..=n).map(|k| tr.point_at(tr.t_end() * k as f64 / n as f64)).collect();
        sc.curves.push(SceneCurve::new(format!("extremal {i}"), pts, "#25c"));
        for lp in &d.loops {
            let pts = (0..=100)
                .map(|k| tr.point_at(lp.s_minus + (lp.s_plus - lp.s_minus) * f64::from(k) / 100.0))
                .collect();
            sc.curves
                .push(SceneCurve::new("loop", pts, "#e80").with_width(3.0).with_class("loop"));
        }
        if i == 0 && d.beta > 0.0 {
            sc.x1_tick(d.beta.sqrt(), "beta^(1/2)");
        }
    }
    Ok(sc)
}

fn rho_k(cfg: &ExperimentConfig) -> f64 {
    match &cfg.rho_policy {
        RhoPolicy::Regime { k, .. } => *k,
        RhoPolicy::Absolute { .. } => 1.0,
    }
}

fn eps_tag(eps: f64) -> String {
    format!("{eps}").replace('.', "p")
}

/// Runs every `eps` stage, writes `report.json`, `solutions.csv`,
/// `failures.json`, `timing.json` (and SVG scenes when requested) into the
/// output directory, and returns the report. Partial results are written
/// even when stages fail.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, Failure> {
    cfg.validate()?;
    let started = Instant::now();
    let hash = cfg.hash();
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;

    let mut stages = Vec::new();
    let mut failures = Vec::new();
    let mut timing = Vec::new();
    let mut csv_rows = Vec::new();
    let k = rho_k(cfg);
    for (idx, &eps) in cfg.epsilon_list.iter().enumerate() {
        let t = Instant::now();
        let params = cfg.params(eps)?;
        let rhos = cfg.rho_policy.rhos(&params);
        let candidate = candidate_record(&params);

        let appendix = if rhos.is_empty() {
            None
        } else {
            let (rec, fs) = appendix_checks(&params, &rhos, k, cfg.rng_seed.wrapping_add(idx as u64), 100);
            failures.extend(fs.iter().map(|f| record(Some(eps), f)));
            Some(rec)
        };

        let mut sols = Vec::new();
        let shooting = if cfg.solver.seed_grid.contains(&0) {
            None
        } else {
            match shooting_record(&params, cfg) {
                Ok((rec, s, fs)) => {
                    failures.extend(fs.iter().map(|f| record(Some(eps), f)));
                    sols = s;
                    Some(rec)
                }
                Err(f) => {
                    failures.push(record(Some(eps), &f));
                    None
                }
            }
        };
        if let Some(sh) = &shooting {
            csv_rows.extend(sh.solutions.iter().cloned());
        }

        if cfg.plot {
            let diags = shooting.as_ref().map(|s| s.diagnostics.as_slice()).unwrap_or(&[]);
            let ex: Vec<_> = sols.iter().map(|s| &s.trajectory).zip(diags).collect();
            let rho = rhos.iter().copied().fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.max(r))));
            let path = dir.join(format!("scene_eps_{}.svg", eps_tag(eps)));
            match scene(&params, rho, &ex).and_then(|sc| {
                let mut sc = sc;
                sc.title = format!("{} [config {}]", sc.title, &hash[..12]);
                plot_scene(&sc, &path)
            }) {
                Ok(()) => {}
                Err(f) => failures.push(record(Some(eps), &f)),
            }
        }

        stages.push(EpsRecord {
            epsilon: eps,
            candidate,
            shooting,
            appendix,
        });
        timing.push(serde_json::json!({ "epsilon": eps, "seconds": t.elapsed().as_secs_f64() }));
    }

    let report = RunReport {
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash.clone(),
        config: cfg.clone(),
        stages,
        failures,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_json(
        &dir.join("failures.json"),
        &serde_json::json!({ "config_hash": hash, "failures": report.failures }),
    )?;
    write_solutions_csv(&dir.join("solutions.csv"), &hash, &csv_rows)?;
    write_json(
        &dir.join("timing.json"),
        &serde_json::json!({
            "config_hash": hash,
            "stages": timing,
            "total_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(report)
}

pub fn write_solutions_csv(path: &Path, hash: &str, rows: &[SolutionRecord]) -> Result<(), Failure> {
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "m", "epsilon", "theta0", "lambda_sign", "lambda_log_mag", "T", "length", "residual_norm", "converged",
        ])
        .map_err(|e| Failure::io(path, e))?;
        for r in rows {
            w.write_record([
                r.m.to_string(),
                r.epsilon.to_string(),
                r.theta0.to_string(),
                r.lambda_sign.to_string(),
                r.lambda_log_mag.to_string(),
                r.t_end.to_string(),
                r.length.to_string(),
                r.residual.norm.to_string(),
                r.converged.to_string(),
            ])
            .map_err(|e| Failure::io(path, e))?;
        }
        w.flush().map_err(|e| Failure::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Failure::io(path, e))
}
