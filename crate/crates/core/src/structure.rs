//! The Martinet-type structure: the polynomial fields `P` and `Q`, the
//! singular candidate curve and its planar projection.

use crate::error::{Error, Result};
use crate::geometry::Polyline;
use crate::numeric::{ipow, CompensatedSum, DoubleDouble};
use crate::quadrature::GaussLegendre;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Standard,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x1: f64,
    pub x2: f64,
}

impl PlanarPoint {
    pub const ORIGIN: Self = Self { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpacePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SpacePoint {
    pub fn planar(&self) -> PlanarPoint {
        PlanarPoint::new(self.x1, self.x2)
    }
}

/// Value of `P` or `Q` together with whether its sign is trustworthy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    /// Set when the two monomials cancel to within the evaluation's rounding
    /// error, so the sign of `value` may be wrong.
    pub uncertain: bool,
}

/// Exponent `m` (odd, at least 5), endpoint parameter `epsilon` and the
/// arithmetic used to evaluate `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureParams {
    m: u32,
    epsilon: f64,
    precision: Precision,
}

impl StructureParams {
    pub fn new(m: u32, epsilon: f64) -> Result<Self> {
        if m < 5 || m % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "m is odd and at least 5 (got {m})"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite (got {epsilon})"
            )));
        }
        Ok(Self {
            m,
            epsilon,
            precision: Precision::Standard,
        })
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Ok(Self::new(self.m, epsilon)?.with_precision(self.precision))
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `m / 2`.
    pub fn mbar(&self) -> f64 {
        f64::from(self.m) / 2.0
    }

    /// `t^(m/2)` computed as `sqrt(t^m)`; `t` must be nonnegative.
    #[inline]
    pub fn pow_mbar(&self, t: f64) -> f64 {
        ipow(t, self.m).sqrt()
    }

    /// The target endpoint `(eps^mbar, eps)`.
    pub fn a_eps(&self) -> PlanarPoint {
        PlanarPoint::new(self.pow_mbar(self.epsilon), self.epsilon)
    }

    #[inline]
    pub fn p(&self, p: PlanarPoint) -> f64 {
        match self.precision {
            Precision::Standard => p.x1.mul_add(p.x1, -ipow(p.x2, self.m)),
            Precision::Extended => self.p_dd(p).to_f64(),
        }
    }

    fn p_dd(&self, p: PlanarPoint) -> DoubleDouble {
        let x1 = DoubleDouble::from(p.x1);
        x1 * x1 - DoubleDouble::from(p.x2).powi(self.m)
    }

    /// `P` with a flag raised when `|P|` is within four ulps of the larger
    /// monomial (scaled by the rounding depth of `x2^m` in binary64).
    pub fn p_checked(&self, p: PlanarPoint) -> FieldValue {
        let a = p.x1 * p.x1;
        let b = ipow(p.x2, self.m).abs();
        let value = self.p(p);
        let ulps = match self.precision {
            Precision::Standard => 4.0 * f64::EPSILON,
            Precision::Extended => 4.0 * f64::EPSILON * f64::EPSILON,
        };
        // x2^m by squaring carries about log2(m)+1 roundings.
        let depth = f64::from(u32::BITS - self.m.leading_zeros()) + 1.0;
        let bound = ulps * depth * a.max(b);
        FieldValue {
            value,
            uncertain: value.abs() <= bound,
        }
    }

    #[inline]
    pub fn q(&self, p: PlanarPoint) -> f64 {
        4.0 * p.x1 * self.p(p)
    }

    pub fn q_checked(&self, p: PlanarPoint) -> FieldValue {
        let pv = self.p_checked(p);
        FieldValue {
            value: 4.0 * p.x1 * pv.value,
            uncertain: pv.uncertain && p.x1 != 0.0,
        }
    }

    /// `grad Q = 4 (3 x1^2 - x2^m, -m x1 x2^(m-1))`.
    pub fn grad_q(&self, p: PlanarPoint) -> (f64, f64) {
        let x2m1 = ipow(p.x2, self.m - 1);
        (
            4.0 * (3.0 * p.x1 * p.x1 - x2m1 * p.x2),
            -4.0 * f64::from(self.m) * p.x1 * x2m1,
        )
    }

    /// The singular candidate `(t^mbar, t, 0)`.
    pub fn gamma_bar(&self, t: f64) -> Result<SpacePoint> {
        if t < 0.0 {
            return Err(Error::NegativeArgument(t));
        }
        Ok(SpacePoint {
            x1: self.pow_mbar(t),
            x2: t,
            x3: 0.0,
        })
    }

    /// Planar projection of the candidate curve at parameter `t >= 0`.
    pub fn omega_bar(&self, t: f64) -> PlanarPoint {
        PlanarPoint::new(self.pow_mbar(t), t)
    }

    /// `n + 1` points of the planar candidate between parameters `t0` and `t1`.
    pub fn omega_bar_samples(&self, t0: f64, t1: f64, n: usize) -> Vec<PlanarPoint> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let t = if i == n {
                    t1
                } else {
                    t0 + (t1 - t0) * (i as f64 / n as f64)
                };
                self.omega_bar(t)
            })
            .collect()
    }

    /// Gauss–Legendre rule integrating `P^2 dx2` exactly on a straight segment
    /// (the integrand is a polynomial of degree `2m` in the segment parameter).
    pub fn segment_rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.m as usize + 2)
    }

    /// `int P^2 dx2` along the straight segment `a -> b`.
    pub fn segment_p2_dx2(&self, rule: &GaussLegendre, a: PlanarPoint, b: PlanarPoint) -> f64 {
        let dx2 = b.x2 - a.x2;
        if dx2 == 0.0 {
            return 0.0;
        }
        let dx1 = b.x1 - a.x1;
        let mut acc = CompensatedSum::new();
        for (t, w) in rule.mapped(0.0, 1.0) {
            let pv = self.p(PlanarPoint::new(a.x1 + t * dx1, a.x2 + t * dx2));
            acc.add(w * pv * pv);
        }
        acc.value() * dx2
    }

    /// Lift of a planar curve to a horizontal curve: `x3` accumulates
    /// `int P^2 dx2` segment by segment.
    pub fn horizontal_lift(&self, curve: &Polyline, x3_start: f64) -> Vec<SpacePoint> {
        let rule = self.segment_rule();
        let v = curve.vertices();
        let mut acc = CompensatedSum::new();
        acc.add(x3_start);
        let mut out = Vec::with_capacity(v.len());
        out.push(SpacePoint {
            x1: v[0].x1,
            x2: v[0].x2,
            x3: x3_start,
        });
        for w in v.windows(2) {
            acc.add(self.segment_p2_dx2(&rule, w[0], w[1]));
            out.push(SpacePoint {
                x1: w[1].x1,
                x2: w[1].x2,
                x3: acc.value(),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m5() -> StructureParams {
        StructureParams::new(5, 0.1).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StructureParams::new(4, 0.1).is_err());
        assert!(StructureParams::new(3, 0.1).is_err());
        assert!(StructureParams::new(5, 0.0).is_err());
        assert!(StructureParams::new(7, f64::NAN).is_err());
        assert_eq!(StructureParams::new(7, 0.2).unwrap().mbar(), 3.5);
    }

    #[test]
    fn field_values() {
        let s = m5();
        assert_eq!(s.p(PlanarPoint::new(0.0, 0.0)), 0.0);
        assert_eq!(s.p(PlanarPoint::new(1.0, 1.0)), 0.0);
        assert_eq!(s.p(PlanarPoint::new(2.0, 1.0)), 3.0);
        assert_eq!(s.q(PlanarPoint::new(1.0, 1.0)), 0.0);
        assert_eq!(s.q(PlanarPoint::new(2.0, 1.0)), 24.0);
        assert_eq!(s.q(PlanarPoint::new(0.0, 1.0)), 0.0);
        assert_eq!(s.grad_q(PlanarPoint::new(0.0, 0.0)), (0.0, 0.0));
        assert_eq!(s.grad_q(PlanarPoint::new(1.0, 0.0)), (12.0, 0.0));
        assert_eq!(s.grad_q(PlanarPoint::new(1.0, 1.0)), (8.0, -20.0));
    }

    #[test]
    fn candidate_curve() {
        let s = m5();
        assert_eq!(s.gamma_bar(0.0).unwrap(), SpacePoint::default());
        let g = s.gamma_bar(4.0).unwrap();
        assert_eq!((g.x1, g.x2, g.x3), (32.0, 4.0, 0.0));
        assert!(matches!(s.gamma_bar(-1.0), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn extended_precision_resolves_near_cancellation() {
        let s = m5().with_precision(Precision::Extended);
        let t: f64 = 0.3;
        // x1 chosen one ulp above the curve.
        let x1 = f64::from_bits(s.pow_mbar(t).to_bits() + 1);
        let p = s.p_checked(PlanarPoint::new(x1, t));
        let exact = {
            let a = DoubleDouble::from(x1) * DoubleDouble::from(x1);
            (a - DoubleDouble::from(t).powi(5)).to_f64()
        };
        assert_eq!(p.value, exact);
        let std = m5().p_checked(PlanarPoint::new(x1, t));
        assert!(std.uncertain);
    }

    #[test]
    fn vertical_segment_lift() {
        let s = m5();
        let c = Polyline::open(vec![PlanarPoint::new(0.0, 0.0), PlanarPoint::new(0.0, 1.0)]).unwrap();
        let lift = s.horizontal_lift(&c, 0.0);
        assert!((lift[1].x3 - 1.0 / 11.0).abs() < 1e-15);
        let h = Polyline::open(vec![PlanarPoint::new(0.3, 0.5), PlanarPoint::new(2.0, 0.5)]).unwrap();
        assert_eq!(s.horizontal_lift(&h, 1.5)[1].x3, 1.5);
    }
}
