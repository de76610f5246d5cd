//! Dormand–Prince 5(4) with FSAL, local extrapolation and the
//! continuous extension of order 4 (Hairer, Nørsett & Wanner).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DIM: usize = 4;
pub type State = [f64; DIM];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep {
    pub s0: f64,
    pub h: f64,
    rc: [State; 5],
}

impl DenseStep {
    /// Linear interpolation between two states (for sampled surrogates).
    pub fn linear(s0: f64, y0: State, s1: f64, y1: State) -> Self {
        let mut rc = [[0.0; DIM]; 5];
        rc[0] = y0;
        for i in 0..DIM {
            rc[1][i] = y1[i] - y0[i];
        }
        Self { s0, h: s1 - s0, rc }
    }

    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn eval(&self, s: f64) -> State {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; DIM];
        for (i, yi) in y.iter_mut().enumerate() {
            let r = &self.rc;
            *yi = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    /// Accept a step when every component's error estimate is below
    /// `tol * max(scale_i, |y_i|)`.
    pub tol: f64,
    pub scales: State,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn new(tol: f64, scales: State) -> Self {
        Self {
            tol,
            scales,
            max_steps: 5_000_000,
        }
    }
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates `y' = f(s, y)` from `s0` to `s_end`, calling `on_step` with
/// the continuous extension and the new state after every accepted step;
/// an error from `on_step` aborts the integration.
pub fn integrate<F, O>(
    mut f: F,
    s0: f64,
    y0: State,
    s_end: f64,
    opts: &Dopri5Options,
    mut on_step: O,
) -> Result<(State, StepStats)>
where
    F: FnMut(f64, &State) -> State,
    O: FnMut(&DenseStep, &State) -> Result<()>,
{
    let span = s_end - s0;
    if !(span > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integration span must be positive (got {span})"
        )));
    }
    let mut stats = StepStats {
        min_step: f64::INFINITY,
        tol: opts.tol,
        ..Default::default()
    };
    let sc = |y: &State, i: usize| opts.tol * opts.scales[i].max(y[i].abs());
    let norm = |v: &State, y: &State| {
        (0..DIM)
            .map(|i| (v[i] / sc(y, i)).abs())
            .fold(0.0, f64::max)
    };

    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    stats.rhs_evals += 1;

    // Initial step guess.
    let mut h = {
        let d0 = norm(&y, &y);
        let d1 = norm(&k1, &y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(&y, h0, &[(1.0, &k1)]);
        let f1 = f(s + h0, &y1);
        stats.rhs_evals += 1;
        let mut diff = [0.0; DIM];
        for i in 0..DIM {
            diff[i] = f1[i] - k1[i];
        }
        let d2 = norm(&diff, &y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    };
    let h_min = 1e-3 * span * f64::EPSILON;
    let mut last_rejected = false;

    while s < s_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        if h < h_min {
            return Err(Error::StepUnderflow { s, h });
        }
        let last = s + h >= s_end || s + 1.0001 * h >= s_end;
        if last {
            h = s_end - s;
        }
        let k2 = f(s + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(s + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            s + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            s + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let s_new = if last { s_end } else { s + h };
        let k7 = f(s_new, &y_new);
        stats.rhs_evals += 6;

        let mut e = [0.0; DIM];
        for i in 0..DIM {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = (0..DIM)
            .map(|i| (e[i] / opts.tol / opts.scales[i].max(y[i].abs()).max(y_new[i].abs())).abs())
            .fold(0.0, f64::max);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let mut rc = [[0.0; DIM]; 5];
            for i in 0..DIM {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - h * k7[i] - bspl;
                rc[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { s0: s, h: s_new - s, rc };
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(step.h);
            stats.max_step = stats.max_step.max(step.h);
            on_step(&step, &y_new)?;
            s = s_new;
            y = y_new;
            k1 = k7;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_: f64, y: &State) -> State {
        [y[1], -y[0], 0.0, 0.0]
    }

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let opts = Dopri5Options::new(1e-10, [1.0; 4]);
        let mut steps = Vec::new();
        let (y, stats) = integrate(harmonic, 0.0, [1.0, 0.0, 0.0, 0.0], 10.0, &opts, |d, _| {
            steps.push(*d);
            Ok(())
        })
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(stats.accepted > 10);
        for d in &steps {
            let s = d.s0 + 0.37 * d.h;
            let yi = d.eval(s);
            assert!((yi[0] - s.cos()).abs() < 1e-8, "dense output at {s}");
        }
        let last = steps.last().unwrap();
        assert_eq!(last.s1(), 10.0);
    }

    #[test]
    fn error_scales_linearly_with_tolerance() {
        let run = |tol: f64| {
            let opts = Dopri5Options::new(tol, [1.0; 4]);
            let (y, _) = integrate(harmonic, 0.0, [1.0, 0.0, 0.0, 0.0], 20.0, &opts, |_, _| Ok(())).unwrap();
            (y[0] - 20f64.cos()).abs()
        };
        let e1 = run(1e-7);
        let e2 = run(1e-10);
        let slope = (e1 / e2).log10() / 3.0;
        assert!((slope - 1.0).abs() < 0.25, "slope {slope}");
    }

    #[test]
    fn degenerate_span_is_rejected() {
        let opts = Dopri5Options::new(1e-8, [1.0; 4]);
        assert!(integrate(harmonic, 1.0, [0.0; 4], 1.0, &opts, |_, _| Ok(())).is_err());
    }
}
