//! Localization of the zeros of `s -> P(omega(s))` and the resulting
//! partition of `[0, T]` into intervals of constant sign.

use super::trajectory::ExtremalTrajectory;
use crate::error::{Error, Result};
use crate::structure::{PlanarPoint, StructureParams};
use serde::{Deserialize, Serialize};

/// Longest run of samples whose sign of `P` is below the noise floor before
/// the partition gives up.
pub const MAX_UNRESOLVED_RUN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// `P > 0` on the interval.
    Plus,
    /// `P < 0` on the interval.
    Minus,
    /// Sign not resolvable (`P` at the noise floor).
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPartition {
    /// `0 = tau_0 < tau_1 < ... < tau_N = T`.
    pub taus: Vec<f64>,
    /// Label of `[tau_i, tau_(i+1)]`.
    pub labels: Vec<Label>,
}

impl SignPartition {
    pub fn interior_zeros(&self) -> usize {
        self.taus.len().saturating_sub(2)
    }
}

fn p_at(params: &StructureParams, tr: &ExtremalTrajectory, s: f64) -> f64 {
    let y = tr.state_at(s);
    params.p(PlanarPoint::new(y[0], y[1]))
}

pub fn sign_partition(params: &StructureParams, tr: &ExtremalTrajectory) -> Result<SignPartition> {
    let beta = tr
        .samples
        .iter()
        .map(|x| params.p(x.point).abs())
        .fold(0.0, f64::max);
    let target = 1e-14 * beta.max(1.0);
    let mut taus = vec![0.0];
    let mut last: Option<(f64, f64)> = None; // (s, sign) of the last resolved sample
    let mut run_start = 0.0;
    let mut run = 0usize;
    for x in &tr.samples {
        let fv = params.p_checked(x.point);
        if fv.uncertain || fv.value == 0.0 {
            if run == 0 {
                run_start = x.s;
            }
            run += 1;
            continue;
        }
        if run > MAX_UNRESOLVED_RUN {
            return Err(Error::UnresolvedZero {
                s0: run_start,
                s1: x.s,
            });
        }
        run = 0;
        let sign = fv.value.signum();
        if let Some((s_prev, sign_prev)) = last {
            if sign != sign_prev {
                taus.push(bisect(params, tr, s_prev, x.s, sign_prev, target));
            }
        }
        last = Some((x.s, sign));
    }
    if run > MAX_UNRESOLVED_RUN {
        return Err(Error::UnresolvedZero {
            s0: run_start,
            s1: tr.t_end(),
        });
    }
    let t_end = tr.t_end();
    if taus.last().is_some_and(|&t| t >= t_end) {
        taus.pop();
    }
    taus.push(t_end);
    let labels = taus
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let y = tr.state_at(mid);
            let fv = params.p_checked(PlanarPoint::new(y[0], y[1]));
            if fv.uncertain || fv.value == 0.0 {
                Label::Zero
            } else if fv.value > 0.0 {
                Label::Plus
            } else {
                Label::Minus
            }
        })
        .collect();
    Ok(SignPartition { taus, labels })
}

fn bisect(
    params: &StructureParams,
    tr: &ExtremalTrajectory,
    mut a: f64,
    mut b: f64,
    sign_a: f64,
    target: f64,
) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let pm = p_at(params, tr, m);
        if pm.abs() <= target {
            return m;
        }
        if pm.signum() == sign_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::trajectory::{integrate_extremal, ExtremalParams};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn vertical_line_crosses_the_curve_once() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let x1: f64 = 0.01;
        let start = PlanarPoint::new(x1, 0.0);
        let ep = ExtremalParams::straight(FRAC_PI_2, 1.0).unwrap();
        let tr = crate::extremal::trajectory::integrate_from(&s, start, &ep, 1e-10).unwrap();
        let part = sign_partition(&s, &tr).unwrap();
        assert_eq!(part.taus.len(), 3, "{part:?}");
        let want = x1.powf(2.0 / 5.0);
        assert!((part.taus[1] - want).abs() < 1e-12, "{} vs {want}", part.taus[1]);
        assert_eq!(part.labels, vec![Label::Plus, Label::Minus]);
    }

    #[test]
    fn positive_region_only() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let ep = ExtremalParams::straight(0.0, 0.5).unwrap();
        let tr = integrate_extremal(&s, &ep, 1e-10).unwrap();
        let part = sign_partition(&s, &tr).unwrap();
        assert_eq!(part.taus, vec![0.0, 0.5]);
        assert_eq!(part.labels, vec![Label::Plus]);
    }
}
