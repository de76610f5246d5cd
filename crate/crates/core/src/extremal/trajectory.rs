use super::ode::{self, DenseStep, Dopri5Options, State, StepStats};
use crate::error::{Error, Result};
use crate::geometry::{io, Polyline};
use crate::numeric::{ipow, SignedLog};
use crate::structure::{PlanarPoint, StructureParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Largest heading change between stored samples. Keeps the chord of every
/// sample pair within `1e-8` of its arclength (chord/arc ~ 1 - dtheta^2/24).
pub const MAX_SAMPLE_TURN: f64 = 4e-4;

/// Cap on stored samples (about 130 full turns); trajectories that wind
/// more than this are not candidates for anything studied here.
pub const MAX_SAMPLES: usize = 2_000_000;

/// Initial heading, multiplier and length of an extremal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub theta0: f64,
    pub lambda: SignedLog,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl ExtremalParams {
    pub fn new(theta0: f64, lambda: SignedLog, t_end: f64) -> Result<Self> {
        if !(theta0 > -PI && theta0 <= PI) {
            return Err(Error::InvalidParameter(format!("theta0 = {theta0} not in (-pi, pi]")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("T = {t_end} must be positive")));
        }
        if lambda.sign != 0 && !lambda.log_mag.is_finite() {
            return Err(Error::InvalidParameter("non-finite log|lambda|".into()));
        }
        Ok(Self {
            theta0,
            lambda,
            t_end,
        })
    }

    /// Straight line (`lambda = 0`).
    pub fn straight(theta0: f64, t_end: f64) -> Result<Self> {
        Self::new(theta0, SignedLog::ZERO, t_end)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub point: PlanarPoint,
    /// Unwrapped heading.
    pub theta: f64,
    /// `int_0^s P^2 dx2`.
    pub constraint: f64,
}

#[derive(Debug, Clone)]
pub struct ExtremalTrajectory {
    pub structure: StructureParams,
    pub params: ExtremalParams,
    pub samples: Vec<Sample>,
    pub step_stats: StepStats,
    dense: Vec<DenseStep>,
}

/// Natural magnitudes of `(x1, x2, theta, constraint)` near the target.
pub fn natural_scales(params: &StructureParams) -> State {
    let e = params.epsilon();
    [params.pow_mbar(e), e, 1.0, e * ipow(e, 2 * params.m())]
}

/// Right-hand side `(cos theta, sin theta, lambda Q, P^2 sin theta)`.
pub fn rhs(params: &StructureParams, lambda: SignedLog, y: &State) -> State {
    let p = PlanarPoint::new(y[0], y[1]);
    let pv = params.p(p);
    let (st, ct) = y[2].sin_cos();
    [ct, st, lambda.mul_f64(4.0 * p.x1 * pv), pv * pv * st]
}

/// Integrates the extremal equations from the origin.
pub fn integrate_extremal(
    params: &StructureParams,
    ep: &ExtremalParams,
    tol: f64,
) -> Result<ExtremalTrajectory> {
    integrate_from(params, PlanarPoint::ORIGIN, ep, tol)
}

/// Integrates from an arbitrary start point (heading `ep.theta0`, used
/// unwrapped so that reversed runs can continue a heading history).
pub fn integrate_from(
    params: &StructureParams,
    start: PlanarPoint,
    ep: &ExtremalParams,
    tol: f64,
) -> Result<ExtremalTrajectory> {
    integrate_limited(params, start, ep, tol, f64::INFINITY)
}

/// As [`integrate_from`], but aborts with [`Error::TurningLimit`] once the
/// accumulated `int |theta'|` exceeds `max_turning`. Used by multistart
/// searches, where seeds with huge `|lambda|` would otherwise wind for a
/// very long time.
pub fn integrate_limited(
    params: &StructureParams,
    start: PlanarPoint,
    ep: &ExtremalParams,
    tol: f64,
    max_turning: f64,
) -> Result<ExtremalTrajectory> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::InvalidParameter(format!("tolerance {tol:e} outside [1e-14, 1e-6]")));
    }
    let y0 = [start.x1, start.x2, ep.theta0, 0.0];
    let opts = Dopri5Options::new(tol, natural_scales(params));
    let mut dense = Vec::new();
    let mut samples = vec![Sample {
        s: 0.0,
        point: start,
        theta: ep.theta0,
        constraint: 0.0,
    }];
    let lambda = ep.lambda;
    let mut turning = 0.0;
    let (_, step_stats) = ode::integrate(
        |_, y| rhs(params, lambda, y),
        0.0,
        y0,
        ep.t_end,
        &opts,
        |step, y_new| {
            let prev = *samples.last().expect("nonempty");
            let pieces = ((y_new[2] - prev.theta).abs() / MAX_SAMPLE_TURN).ceil().max(1.0) as usize;
            let mut left = prev;
            for j in 1..=pieces {
                let right = if j == pieces {
                    sample(step.s1(), y_new)
                } else {
                    let s = step.s0 + step.h * (j as f64 / pieces as f64);
                    sample(s, &step.eval(s))
                };
                refine(step, left, right, &mut samples, 0);
                samples.push(right);
                left = right;
            }
            dense.push(*step);
            turning += (y_new[2] - prev.theta).abs();
            if turning > max_turning {
                return Err(Error::TurningLimit(max_turning));
            }
            if samples.len() > MAX_SAMPLES {
                return Err(Error::TooManySamples(MAX_SAMPLES));
            }
            Ok(())
        },
    )?;
    Ok(ExtremalTrajectory {
        structure: *params,
        params: *ep,
        samples,
        step_stats,
        dense,
    })
}

/// Final state `(x1, x2, theta, constraint)` only, without samples or dense
/// output. Aborts with [`Error::TurningLimit`] once the summed per-step
/// heading change exceeds `max_turning`.
pub fn final_state(
    params: &StructureParams,
    ep: &ExtremalParams,
    tol: f64,
    max_turning: f64,
) -> Result<State> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::InvalidParameter(format!("tolerance {tol:e} outside [1e-14, 1e-6]")));
    }
    let opts = Dopri5Options::new(tol, natural_scales(params));
    let lambda = ep.lambda;
    let mut theta = ep.theta0;
    let mut turning = 0.0;
    let (y, _) = ode::integrate(
        |_, y| rhs(params, lambda, y),
        0.0,
        [0.0, 0.0, ep.theta0, 0.0],
        ep.t_end,
        &opts,
        |_, y_new| {
            turning += (y_new[2] - theta).abs();
            theta = y_new[2];
            if turning > max_turning {
                return Err(Error::TurningLimit(max_turning));
            }
            Ok(())
        },
    )?;
    Ok(y)
}

/// Inserts samples strictly between `a` and `b` until consecutive headings
/// differ by at most `MAX_SAMPLE_TURN`.
fn refine(step: &DenseStep, a: Sample, b: Sample, out: &mut Vec<Sample>, depth: u32) {
    if (b.theta - a.theta).abs() <= MAX_SAMPLE_TURN || depth >= 40 {
        return;
    }
    let s = 0.5 * (a.s + b.s);
    let mid = sample(s, &step.eval(s));
    refine(step, a, mid, out, depth + 1);
    out.push(mid);
    refine(step, mid, b, out, depth + 1);
}

fn sample(s: f64, y: &State) -> Sample {
    Sample {
        s,
        point: PlanarPoint::new(y[0], y[1]),
        theta: y[2],
        constraint: y[3],
    }
}

impl ExtremalTrajectory {
    /// A trajectory-shaped view of an arbitrary sampled curve (linear
    /// interpolation between samples; headings from the chords).
    pub fn from_curve(
        structure: &StructureParams,
        c: &Polyline,
        lambda: SignedLog,
    ) -> Result<Self> {
        let v = c.vertices();
        let cum = c.cum_arclength();
        let rule = structure.segment_rule();
        let mut theta = (v[1].x2 - v[0].x2).atan2(v[1].x1 - v[0].x1);
        let theta0 = theta;
        let mut constraint = 0.0;
        let mut samples = vec![Sample {
            s: 0.0,
            point: v[0],
            theta,
            constraint,
        }];
        let mut dense = Vec::with_capacity(v.len() - 1);
        for i in 0..v.len() - 1 {
            let heading = (v[i + 1].x2 - v[i].x2).atan2(v[i + 1].x1 - v[i].x1);
            theta += wrap_angle(heading - theta);
            let c0 = constraint;
            constraint += structure.segment_p2_dx2(&rule, v[i], v[i + 1]);
            let y0 = [v[i].x1, v[i].x2, theta, c0];
            let y1 = [v[i + 1].x1, v[i + 1].x2, theta, constraint];
            dense.push(DenseStep::linear(cum[i], y0, cum[i + 1], y1));
            samples.push(Sample {
                s: cum[i + 1],
                point: v[i + 1],
                theta,
                constraint,
            });
        }
        Ok(Self {
            structure: *structure,
            params: ExtremalParams::new(wrap_angle(theta0), lambda, c.length())?,
            samples,
            step_stats: StepStats::default(),
            dense,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.params.t_end
    }

    pub fn endpoint(&self) -> PlanarPoint {
        self.samples.last().expect("nonempty").point
    }

    pub fn final_theta(&self) -> f64 {
        self.samples.last().expect("nonempty").theta
    }

    pub fn constraint(&self) -> f64 {
        self.samples.last().expect("nonempty").constraint
    }

    pub fn dense_steps(&self) -> &[DenseStep] {
        &self.dense
    }

    /// State `(x1, x2, theta, constraint)` at arclength `s` from the
    /// continuous extension.
    pub fn state_at(&self, s: f64) -> State {
        let s = s.clamp(0.0, self.t_end());
        let i = self.dense.partition_point(|d| d.s1() < s).min(self.dense.len() - 1);
        self.dense[i].eval(s)
    }

    pub fn point_at(&self, s: f64) -> PlanarPoint {
        let y = self.state_at(s);
        PlanarPoint::new(y[0], y[1])
    }

    pub fn to_polyline(&self) -> Result<Polyline> {
        Polyline::open_dedup(self.samples.iter().map(|x| x.point).collect())
    }

    /// Writes `<stem>.mlab` (binary frame) and `<stem>.json` (sidecar with
    /// the structure, extremal parameters and step statistics).
    pub fn write(&self, stem: &Path) -> Result<()> {
        let poly = self.to_polyline()?;
        let frame = std::fs::File::create(stem.with_extension("mlab"))?;
        io::write_frame(&poly, std::io::BufWriter::new(frame))?;
        let side = Sidecar {
            m: self.structure.m(),
            epsilon: self.structure.epsilon(),
            params: self.params,
            step_stats: self.step_stats,
            samples: self.samples.len(),
        };
        let json = serde_json::to_string_pretty(&side)?;
        std::fs::write(stem.with_extension("json"), json)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub m: u32,
    pub epsilon: f64,
    pub params: ExtremalParams,
    pub step_stats: StepStats,
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> StructureParams {
        StructureParams::new(5, 0.1).unwrap()
    }

    #[test]
    fn straight_line_when_lambda_vanishes() {
        let s = p5();
        let theta0 = 0.7;
        let tr = integrate_extremal(&s, &ExtremalParams::straight(theta0, 1.0).unwrap(), 1e-10).unwrap();
        let e = tr.endpoint();
        assert!((e.x1 - theta0.cos()).abs() < 1e-14);
        assert!((e.x2 - theta0.sin()).abs() < 1e-14);
        assert!(tr.samples.iter().all(|x| x.theta == theta0));
        let flat = integrate_extremal(&s, &ExtremalParams::straight(0.0, 1.0).unwrap(), 1e-10).unwrap();
        assert_eq!(flat.constraint(), 0.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(ExtremalParams::straight(-PI, 1.0).is_err());
        assert!(ExtremalParams::straight(PI, 1.0).is_ok());
        assert!(ExtremalParams::straight(0.0, 0.0).is_err());
        let ep = ExtremalParams::straight(0.0, 1.0).unwrap();
        assert!(integrate_extremal(&p5(), &ep, 1e-5).is_err());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn curved_samples_are_fine_enough() {
        let s = p5();
        let ep = ExtremalParams::new(1.2, SignedLog::new(-1, 12.0), 0.1).unwrap();
        let tr = integrate_extremal(&s, &ep, 1e-10).unwrap();
        for w in tr.samples.windows(2) {
            assert!((w[1].theta - w[0].theta).abs() <= MAX_SAMPLE_TURN * 1.0001);
        }
    }
}
