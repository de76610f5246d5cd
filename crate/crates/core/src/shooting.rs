//! Two-point boundary problem with the isoperimetric constraint: find
//! `(theta0, lambda, T)` with `omega(T) = A_eps` and `int P^2 dx2 = 0`.
//!
//! Damped Newton on `u = (theta0, log|lambda|, log T)` (sign of `lambda`
//! fixed per run), finite-difference Jacobian, Armijo backtracking on the
//! scaled sup-norm with a Levenberg–Marquardt fallback.

use crate::error::{Error, Result};
use crate::extremal::{
    diagnostics, final_state, integrate_extremal, wrap_angle, DiagnosticsReport, ExtremalParams,
    ExtremalTrajectory,
};
use crate::extremal::ode::State;
use crate::numeric::{ipow, SignedLog};
use crate::structure::{PlanarPoint, StructureParams};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingResidual {
    pub dx1: f64,
    pub dx2: f64,
    pub dconstraint: f64,
    /// `max(|dx1|/s1, |dx2|/s2, |dconstraint|/s3)`, see [`Target::scales`].
    pub norm: f64,
}

/// What the shot must hit. For the problem proper this is
/// `(A_eps, 0)`; other targets are used for manufactured-solution checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub endpoint: PlanarPoint,
    pub constraint: f64,
    /// Drop the constraint equation (and `lambda`) from the system.
    pub endpoint_only: bool,
}

impl Target {
    pub fn problem(params: &StructureParams) -> Self {
        Self {
            endpoint: params.a_eps(),
            constraint: 0.0,
            endpoint_only: false,
        }
    }

    pub fn endpoint_only(params: &StructureParams) -> Self {
        Self {
            endpoint_only: true,
            ..Self::problem(params)
        }
    }

    /// Residual scales: the natural sizes `eps^mbar`, `eps`, `eps^(2m+1)`,
    /// enlarged to the target's own magnitude when that is larger.
    pub fn scales(&self, params: &StructureParams) -> [f64; 3] {
        let e = params.epsilon();
        [
            params.pow_mbar(e).max(self.endpoint.x1.abs()),
            e.max(self.endpoint.x2.abs()),
            (e * ipow(e, 2 * params.m())).max(self.constraint.abs()),
        ]
    }
}

fn residual_of(params: &StructureParams, tr: &ExtremalTrajectory, target: &Target) -> ShootingResidual {
    let e = tr.endpoint();
    residual_of_state(params, &[e.x1, e.x2, tr.final_theta(), tr.constraint()], target)
}

fn residual_of_state(params: &StructureParams, y: &State, target: &Target) -> ShootingResidual {
    let [s1, s2, s3] = target.scales(params);
    let dx1 = y[0] - target.endpoint.x1;
    let dx2 = y[1] - target.endpoint.x2;
    let dconstraint = if target.endpoint_only {
        0.0
    } else {
        y[3] - target.constraint
    };
    let norm = (dx1.abs() / s1).max(dx2.abs() / s2).max(dconstraint.abs() / s3);
    ShootingResidual {
        dx1,
        dx2,
        dconstraint,
        norm,
    }
}

/// Integrates from `A_0` and evaluates the defects against `A_eps` and the
/// zero constraint.
pub fn shoot(params: &StructureParams, ep: &ExtremalParams, tol: f64) -> Result<ShootingResidual> {
    shoot_to(params, ep, &Target::problem(params), tol)
}

pub fn shoot_to(
    params: &StructureParams,
    ep: &ExtremalParams,
    target: &Target,
    tol: f64,
) -> Result<ShootingResidual> {
    let tr = integrate_extremal(params, ep, tol)?;
    Ok(residual_of(params, &tr, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub integration_tol: f64,
    /// Relative agreement below which two converged parameter sets are
    /// the same solution.
    pub dedup_rel: f64,
    /// Sign imposed on `lambda` (normally `-1`; `+1` for the diagnostic
    /// mode that checks the other sign does no better).
    pub lambda_sign: i8,
    pub target: Target,
    /// Iterates whose trajectory turns by more than this are treated as
    /// failed evaluations (their integration is abandoned early).
    pub max_turning: f64,
}

impl SolverOptions {
    pub fn new(params: &StructureParams) -> Self {
        Self {
            tol: 1e-9,
            max_iter: 60,
            integration_tol: 1e-12,
            dedup_rel: 1e-6,
            lambda_sign: -1,
            target: Target::problem(params),
            max_turning: 8.0 * std::f64::consts::PI,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.integration_tol > self.tol / 100.0 {
            return Err(Error::InvalidParameter(format!(
                "integration tol {:e} must be <= shooting tol {:e} / 100",
                self.integration_tol, self.tol
            )));
        }
        if !self.target.endpoint_only && self.lambda_sign == 0 {
            return Err(Error::InvalidParameter("lambda sign must be +-1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub ep: ExtremalParams,
    pub residual: ShootingResidual,
    pub trajectory: ExtremalTrajectory,
    pub length: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One seed's Newton history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub seed: ExtremalParams,
    /// Residual norm after each iteration (first entry: at the seed).
    pub trace: Vec<f64>,
    pub best: Option<ExtremalParams>,
    pub best_norm: f64,
    pub converged: bool,
    /// Why the iteration stopped early, if it did.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BvpOutcome {
    /// Distinct converged solutions, sorted by (length, theta0).
    pub solutions: Vec<ShootingSolution>,
    /// One per seed, in seed order; non-converged seeds keep their best
    /// iterate and residual trace here.
    pub attempts: Vec<Attempt>,
}

impl BvpOutcome {
    pub fn attempt_count(&self) -> usize {
        self.attempts.len()
    }
}

struct System<'a> {
    params: &'a StructureParams,
    opts: &'a SolverOptions,
}

impl System<'_> {
    fn dim(&self) -> usize {
        if self.opts.target.endpoint_only {
            2
        } else {
            3
        }
    }

    fn to_u(&self, ep: &ExtremalParams) -> DVector<f64> {
        if self.opts.target.endpoint_only {
            DVector::from_vec(vec![ep.theta0, ep.t_end.ln()])
        } else {
            DVector::from_vec(vec![ep.theta0, ep.lambda.log_mag, ep.t_end.ln()])
        }
    }

    fn to_ep(&self, u: &DVector<f64>) -> Result<ExtremalParams> {
        if self.opts.target.endpoint_only {
            ExtremalParams::straight(wrap_angle(u[0]), u[1].exp())
        } else {
            ExtremalParams::new(
                wrap_angle(u[0]),
                SignedLog::new(self.opts.lambda_sign, u[1]),
                u[2].exp(),
            )
        }
    }

    fn eval(&self, u: &DVector<f64>) -> Result<(DVector<f64>, ShootingResidual, ExtremalParams)> {
        let ep = self.to_ep(u)?;
        let y = final_state(self.params, &ep, self.opts.integration_tol, self.opts.max_turning)?;
        let r = residual_of_state(self.params, &y, &self.opts.target);
        let [s1, s2, s3] = self.opts.target.scales(self.params);
        let mut f = vec![r.dx1 / s1, r.dx2 / s2];
        if !self.opts.target.endpoint_only {
            f.push(r.dconstraint / s3);
        }
        Ok((DVector::from_vec(f), r, ep))
    }

    fn jacobian(&self, u: &DVector<f64>, f0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = (1e-7 * u[i].abs()).max(1e-7);
            let mut up = u.clone();
            up[i] += h;
            let mut um = u.clone();
            um[i] -= h;
            let col = match (self.eval(&up), self.eval(&um)) {
                (Ok((fp, ..)), Ok((fm, ..))) => (fp - fm) / (2.0 * h),
                (Ok((fp, ..)), Err(_)) => (fp - f0) / h,
                (Err(_), Ok((fm, ..))) => (f0 - fm) / h,
                (Err(e), Err(_)) => return Err(e),
            };
            j.set_column(i, &col);
        }
        Ok(j)
    }
}

fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn lm_step(j: &DMatrix<f64>, f: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let jt = j.transpose();
    let mut a = &jt * j;
    let scale = a.diagonal().iter().fold(0.0_f64, |m, x| m.max(*x)).max(1e-300);
    for i in 0..a.nrows() {
        a[(i, i)] += mu * scale;
    }
    a.lu().solve(&(-(jt * f)))
}

struct Newton {
    u: DVector<f64>,
    f: DVector<f64>,
    residual: ShootingResidual,
    ep: ExtremalParams,
    iterations: usize,
    attempt: Attempt,
}

fn newton(sys: &System, seed: &ExtremalParams) -> Result<Newton> {
    let u0 = sys.to_u(seed);
    let (f0, r0, ep0) = sys.eval(&u0)?;
    let mut st = Newton {
        u: u0,
        f: f0,
        residual: r0,
        ep: ep0,
        iterations: 0,
        attempt: Attempt {
            seed: *seed,
            trace: vec![r0.norm],
            best: Some(*seed),
            best_norm: r0.norm,
            converged: r0.norm <= sys.opts.tol,
            failure: None,
        },
    };
    while !st.attempt.converged && st.iterations < sys.opts.max_iter {
        let j = match sys.jacobian(&st.u, &st.f) {
            Ok(j) => j,
            Err(e) => {
                st.attempt.failure = Some(format!("jacobian: {e}"));
                break;
            }
        };
        let norm = sup(&st.f);
        let newton_dir = j.clone().lu().solve(&(-&st.f)).filter(|d| d.iter().all(|x| x.is_finite()));
        let mut directions: Vec<DVector<f64>> = newton_dir.into_iter().collect();
        for mu in [1e-6, 1e-3, 1.0] {
            if let Some(d) = lm_step(&j, &st.f, mu) {
                directions.push(d);
            }
        }
        let mut accepted = None;
        'search: for d in &directions {
            let mut alpha = 1.0;
            for _ in 0..12 {
                let trial = &st.u + alpha * d;
                if let Ok((ft, rt, trt)) = sys.eval(&trial) {
                    if sup(&ft) <= (1.0 - 1e-4 * alpha) * norm {
                        accepted = Some((trial, ft, rt, trt));
                        break 'search;
                    }
                }
                alpha *= 0.5;
            }
        }
        st.iterations += 1;
        match accepted {
            Some((u, f, r, ep)) => {
                st.u = u;
                st.f = f;
                st.residual = r;
                st.ep = ep;
                st.attempt.trace.push(r.norm);
                st.attempt.best = Some(ep);
                st.attempt.best_norm = r.norm;
                st.attempt.converged = r.norm <= sys.opts.tol;
            }
            None => {
                st.attempt.failure = Some("line search stalled".into());
                break;
            }
        }
    }
    if !st.attempt.converged && st.attempt.failure.is_none() {
        st.attempt.failure = Some("iteration limit".into());
    }
    Ok(st)
}

fn same_solution(a: &ExtremalParams, b: &ExtremalParams, rel: f64) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= rel * x.abs().max(y.abs()).max(1.0);
    close(a.theta0, b.theta0)
        && a.lambda.sign == b.lambda.sign
        && close(a.lambda.log_mag, b.lambda.log_mag)
        && close(a.t_end, b.t_end)
}

fn by_length(a: &ShootingSolution, b: &ShootingSolution) -> Ordering {
    a.length
        .total_cmp(&b.length)
        .then(a.ep.theta0.total_cmp(&b.ep.theta0))
}

/// Solves from every seed in parallel; results are merged in a fixed order
/// so the outcome does not depend on scheduling.
pub fn solve_bvp(
    params: &StructureParams,
    seeds: &[ExtremalParams],
    opts: &SolverOptions,
) -> Result<BvpOutcome> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    opts.validate()?;
    let sys = System { params, opts };
    let runs: Vec<Result<(Attempt, Option<ShootingSolution>)>> = seeds
        .par_iter()
        .map(|seed| {
            let st = match newton(&sys, seed) {
                Ok(st) => st,
                Err(e) => {
                    let attempt = Attempt {
                        seed: *seed,
                        trace: Vec::new(),
                        best: None,
                        best_norm: f64::INFINITY,
                        converged: false,
                        failure: Some(format!("seed: {e}")),
                    };
                    return Ok((attempt, None));
                }
            };
            if !st.attempt.converged {
                return Ok((st.attempt, None));
            }
            let trajectory = integrate_extremal(params, &st.ep, opts.integration_tol)?;
            let sol = ShootingSolution {
                ep: st.ep,
                residual: residual_of(params, &trajectory, &opts.target),
                length: st.ep.t_end,
                trajectory,
                iterations: st.iterations,
                converged: true,
            };
            Ok((st.attempt, Some(sol)))
        })
        .collect();

    let mut attempts = Vec::with_capacity(runs.len());
    let mut converged: Vec<ShootingSolution> = Vec::new();
    for run in runs {
        let (attempt, sol) = run?;
        attempts.push(attempt);
        converged.extend(sol);
    }
    converged.sort_by(by_length);
    let mut solutions: Vec<ShootingSolution> = Vec::new();
    for s in converged {
        if !solutions.iter().any(|t| same_solution(&t.ep, &s.ep, opts.dedup_rel)) {
            solutions.push(s);
        }
    }
    Ok(BvpOutcome {
        solutions,
        attempts,
    })
}

/// Tensor grid of seeds `theta0 x log|lambda| x T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedGrid {
    pub theta0: Vec<f64>,
    pub log_lambda: Vec<f64>,
    pub t_end: Vec<f64>,
}

impl SeedGrid {
    /// Headings around the chord direction, `log|lambda|` somewhat below the
    /// scale `eps^-(3m-2)` (larger values wind past any sensible turning
    /// budget), and lengths slightly above `|A_eps|`.
    pub fn around_candidate(params: &StructureParams, n_theta: usize, n_lambda: usize, n_t: usize) -> Self {
        let e = params.epsilon();
        let a = params.a_eps();
        let chord_dir = a.x2.atan2(a.x1);
        let m = f64::from(params.m());
        let lam0 = -(3.0 * m - 2.0) * e.ln();
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        Self {
            theta0: lin(chord_dir - 0.4, chord_dir + 0.2, n_theta),
            log_lambda: lin(lam0 - 11.0, lam0 - 3.0, n_lambda),
            t_end: lin(1.0, 1.05, n_t).into_iter().map(|f| f * a.norm()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta0.len() * self.log_lambda.len() * self.t_end.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seeds(&self, lambda_sign: i8) -> Result<Vec<ExtremalParams>> {
        let mut out = Vec::with_capacity(self.len());
        for &th in &self.theta0 {
            for &ll in &self.log_lambda {
                for &t in &self.t_end {
                    out.push(ExtremalParams::new(
                        wrap_angle(th),
                        SignedLog::new(lambda_sign, ll),
                        t,
                    )?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationStage {
    pub epsilon: f64,
    pub outcome: BvpOutcome,
    pub diagnostics: Vec<DiagnosticsReport>,
    /// Indices (into the previous stage's solutions) whose warm start did
    /// not converge.
    pub gaps: Vec<usize>,
}

/// Continuation in `eps` (strictly descending). The first stage solves from
/// `seeds`; later stages warm-start from the previous stage's solutions with
/// `lambda` rescaled by `(eps_new/eps_old)^-(3m-2)` and `T` by
/// `eps_new/eps_old`.
pub fn continuation_sweep(
    params: &StructureParams,
    epsilons: &[f64],
    seeds: &[ExtremalParams],
    opts: &SolverOptions,
) -> Result<Vec<ContinuationStage>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon list".into()));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InputNotSorted);
    }
    let m = f64::from(params.m());
    let mut stages: Vec<ContinuationStage> = Vec::new();
    for &eps in epsilons {
        let p = params.with_epsilon(eps)?;
        let mut o = *opts;
        o.target = Target {
            endpoint_only: opts.target.endpoint_only,
            ..Target::problem(&p)
        };
        let (stage_seeds, origin): (Vec<ExtremalParams>, Vec<usize>) = match stages.last() {
            None => (seeds.to_vec(), Vec::new()),
            Some(prev) => {
                let ratio = eps / prev.epsilon;
                let mut v = Vec::new();
                let mut idx = Vec::new();
                for (i, s) in prev.outcome.solutions.iter().enumerate() {
                    v.push(ExtremalParams::new(
                        s.ep.theta0,
                        s.ep.lambda.scaled(ratio.powf(-(3.0 * m - 2.0))),
                        s.ep.t_end * ratio,
                    )?);
                    idx.push(i);
                }
                (v, idx)
            }
        };
        if stage_seeds.is_empty() {
            stages.push(ContinuationStage {
                epsilon: eps,
                outcome: BvpOutcome {
                    solutions: Vec::new(),
                    attempts: Vec::new(),
                },
                diagnostics: Vec::new(),
                gaps: Vec::new(),
            });
            continue;
        }
        let outcome = solve_bvp(&p, &stage_seeds, &o)?;
        let gaps = origin
            .iter()
            .zip(&outcome.attempts)
            .filter(|(_, a)| !a.converged)
            .map(|(&i, _)| i)
            .collect();
        let diagnostics = outcome
            .solutions
            .iter()
            .map(|s| diagnostics(&p, &s.trajectory))
            .collect::<Result<Vec<_>>>()?;
        stages.push(ContinuationStage {
            epsilon: eps,
            outcome,
            diagnostics,
            gaps,
        });
    }
    Ok(stages)
}

/// Persisted form of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub m: u32,
    pub epsilon: f64,
    pub theta0: f64,
    pub lambda_sign: i8,
    pub lambda_log_mag: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub residual: ShootingResidual,
    pub length: f64,
    pub converged: bool,
    pub diagnostics_ref: Option<String>,
}

impl SolutionRecord {
    pub fn new(params: &StructureParams, s: &ShootingSolution, diagnostics_ref: Option<String>) -> Self {
        Self {
            m: params.m(),
            epsilon: params.epsilon(),
            theta0: s.ep.theta0,
            lambda_sign: s.ep.lambda.sign,
            lambda_log_mag: s.ep.lambda.log_mag,
            t_end: s.ep.t_end,
            residual: s.residual,
            length: s.length,
            converged: s.converged,
            diagnostics_ref,
        }
    }

    pub fn params(&self) -> Result<ExtremalParams> {
        ExtremalParams::new(
            self.theta0,
            SignedLog::new(self.lambda_sign, self.lambda_log_mag),
            self.t_end,
        )
    }
}
