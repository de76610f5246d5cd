//! Measured anatomy of an extremal: sup of `|P|`, sign partition, loops,
//! turning, and the qualitative and scaling properties expected of a
//! minimizing normal extremal, each reported as a verdict or a ratio.

use super::partition::{sign_partition, Label, SignPartition};
use super::trajectory::ExtremalTrajectory;
use crate::error::{Error, Result};
use crate::geometry::loops;
use crate::structure::StructureParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

/// `holds` is `None` for items whose statement involves an unnamed
/// constant; `margin` then carries the measured dimensionless ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: Option<bool>,
    pub margin: f64,
}

impl Verdict {
    fn check(holds: bool, margin: f64) -> Self {
        Self {
            holds: Some(holds),
            margin,
        }
    }

    fn ratio(margin: f64) -> Self {
        Self {
            holds: None,
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub s_minus: f64,
    pub s_plus: f64,
    pub length: f64,
    pub max_abs_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub beta: f64,
    pub beta_argmax: f64,
    pub lambda_sign: i8,
    /// `None` when the sign of `P` cannot be resolved along the curve
    /// (e.g. for curves lying on `{P = 0}`).
    pub sign_partition: Option<SignPartition>,
    pub loops: Vec<LoopInfo>,
    pub total_abs_turning: f64,
    pub endpoint_defect: f64,
    pub anatomy: BTreeMap<String, Verdict>,
    pub scale_bounds: BTreeMap<String, Verdict>,
}

impl DiagnosticsReport {
    pub fn beta_ratio(&self, params: &StructureParams) -> f64 {
        self.beta / params.epsilon().powf(3.0 * params.mbar() - 1.0)
    }
}

pub fn diagnostics(params: &StructureParams, tr: &ExtremalTrajectory) -> Result<DiagnosticsReport> {
    let eps = params.epsilon();
    let mbar = params.mbar();
    let m = f64::from(params.m());
    let eps_mbar = params.pow_mbar(eps);
    let samples = &tr.samples;

    let (mut beta, mut beta_argmax) = (0.0_f64, 0.0);
    let (mut min_x1, mut max_x1, mut max_abs_x2) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64);
    let mut turning = 0.0;
    for (k, x) in samples.iter().enumerate() {
        let p = params.p(x.point).abs();
        if p > beta {
            beta = p;
            beta_argmax = x.s;
        }
        if k > 0 {
            min_x1 = min_x1.min(x.point.x1);
            turning += (x.theta - samples[k - 1].theta).abs();
        }
        max_x1 = max_x1.max(x.point.x1);
        max_abs_x2 = max_abs_x2.max(x.point.x2.abs());
    }

    let partition = match sign_partition(params, tr) {
        Ok(p) => Some(p),
        Err(Error::UnresolvedZero { .. }) => None,
        Err(e) => return Err(e),
    };

    let poly = tr.to_polyline()?;
    let loop_list: Vec<LoopInfo> = loops(&poly)
        .into_iter()
        .map(|(a, b)| {
            let max_abs_p = samples
                .iter()
                .filter(|x| x.s >= a && x.s <= b)
                .map(|x| params.p(x.point).abs())
                .fold(0.0, f64::max);
            LoopInfo {
                s_minus: a,
                s_plus: b,
                length: b - a,
                max_abs_p,
            }
        })
        .collect();

    let lam = tr.params.lambda;
    // |lambda| * x in the log domain.
    let lam_times = |x: f64| {
        if lam.sign == 0 || x == 0.0 {
            0.0
        } else {
            (lam.log_mag + x.ln()).exp()
        }
    };

    let mut anatomy = BTreeMap::new();
    anatomy.insert(
        "x1_positive".to_string(),
        Verdict::check(min_x1 > 0.0, min_x1 / eps_mbar),
    );
    anatomy.insert(
        "x2_bound".to_string(),
        Verdict::check(max_abs_x2 <= 2.0 * eps, (2.0 * eps - max_abs_x2) / eps),
    );
    let beta_ratio = beta / eps.powf(3.0 * mbar - 1.0);
    anatomy.insert("beta_ratio".to_string(), Verdict::ratio(beta_ratio));
    anatomy.insert(
        "lambda_negative".to_string(),
        Verdict::check(lam.sign < 0, -f64::from(lam.sign)),
    );
    // Margin: number of interior sign changes of P (0 when the item holds).
    let iv = match &partition {
        Some(p) => Verdict::check(
            p.labels.iter().all(|&l| l == Label::Plus),
            p.interior_zeros() as f64,
        ),
        None => Verdict::check(false, f64::NAN),
    };
    anatomy.insert("interior_positive".to_string(), iv);
    anatomy.insert(
        "unique_loop".to_string(),
        Verdict::check(loop_list.len() == 1, loop_list.len() as f64),
    );
    if let [l] = loop_list.as_slice() {
        anatomy.insert(
            "loop_length_ratio".to_string(),
            Verdict::ratio(l.length / beta.powf(1.0 - 1.0 / m)),
        );
        anatomy.insert(
            "loop_height_ratio".to_string(),
            Verdict::ratio(tr.point_at(l.s_minus).x2 / eps),
        );
        anatomy.insert(
            "loop_carries_beta".to_string(),
            Verdict::check(l.max_abs_p >= beta * (1.0 - 1e-6), l.max_abs_p / beta),
        );
    }
    anatomy.insert("lambda_beta_sq".to_string(), Verdict::ratio(lam_times(beta * beta)));
    let mut vii: f64 = 0.0;
    for k in 1..samples.len().saturating_sub(1) {
        let (a, b, c) = (
            params.p(samples[k - 1].point),
            params.p(samples[k].point),
            params.p(samples[k + 1].point),
        );
        let s = samples[k].s;
        let in_loop = loop_list.iter().any(|l| s >= l.s_minus && s <= l.s_plus);
        if b > a && b >= c && b > 0.0 && !in_loop {
            vii = vii.max(lam_times(b.powf(1.0 + 1.0 / mbar)));
        }
    }
    anatomy.insert("local_max_ratio".to_string(), Verdict::ratio(vii));
    anatomy.insert(
        "total_turning".to_string(),
        Verdict::check(turning <= 6.0 * PI, turning / (6.0 * PI)),
    );

    let mut scales = BTreeMap::new();
    scales.insert(
        "theta0".to_string(),
        Verdict::check(
            tr.params.theta0.abs() < FRAC_PI_2,
            FRAC_PI_2 - tr.params.theta0.abs(),
        ),
    );
    scales.insert(
        "box".to_string(),
        Verdict::check(
            max_x1 <= 2.0 * eps_mbar && max_abs_x2 <= 2.0 * eps,
            (max_x1 / (2.0 * eps_mbar)).max(max_abs_x2 / (2.0 * eps)),
        ),
    );
    scales.insert("beta_ratio".to_string(), Verdict::ratio(beta_ratio));
    scales.insert(
        "not_injective".to_string(),
        Verdict::check(!loop_list.is_empty(), loop_list.len() as f64),
    );
    scales.insert(
        "lambda_nonzero".to_string(),
        Verdict::check(lam.sign != 0, f64::from(lam.sign.abs())),
    );
    let worst_loop = loop_list
        .iter()
        .map(|l| l.length / beta.powf(1.0 - 1.0 / m))
        .fold(0.0, f64::max);
    scales.insert("loop_length_ratio".to_string(), Verdict::ratio(worst_loop));

    Ok(DiagnosticsReport {
        beta,
        beta_argmax,
        lambda_sign: lam.sign,
        sign_partition: partition,
        loops: loop_list,
        total_abs_turning: turning,
        endpoint_defect: tr.endpoint().dist(&params.a_eps()),
        anatomy: anatomy,
        scale_bounds: scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::trajectory::{integrate_extremal, ExtremalParams};
    use crate::geometry::Polyline;
    use crate::numeric::SignedLog;

    #[test]
    fn chord_has_no_loops_and_no_turning() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let a = s.a_eps();
        let ep = ExtremalParams::straight(a.x2.atan2(a.x1), a.norm()).unwrap();
        let tr = integrate_extremal(&s, &ep, 1e-12).unwrap();
        let d = diagnostics(&s, &tr).unwrap();
        assert!(d.loops.is_empty());
        assert_eq!(d.total_abs_turning, 0.0);
        assert_eq!(d.anatomy["lambda_negative"].holds, Some(false));
        assert!(d.endpoint_defect < 1e-14);
    }

    #[test]
    fn candidate_surrogate_is_singular() {
        let s = StructureParams::new(5, 0.1).unwrap();
        let c = Polyline::open(s.omega_bar_samples(0.0, 0.1, 2000)).unwrap();
        let tr = ExtremalTrajectory::from_curve(&s, &c, SignedLog::ZERO).unwrap();
        let d = diagnostics(&s, &tr).unwrap();
        assert!(d.beta < 1e-20, "beta {}", d.beta);
        assert!(d.sign_partition.is_none());
    }
}
