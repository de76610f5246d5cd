//! Scalar building blocks: error-free transformations, a double-double type,
//! compensated accumulation, integer powers and a signed-logarithm scalar.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// `x^n` by exponentiation by squaring.
#[inline]
pub fn ipow(x: f64, n: u32) -> f64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(large: f64, small: f64) -> (f64, f64) {
    let s = large + small;
    (s, small - (s - large))
}

/// Error-free product: `a * b = p + e` exactly (barring over/underflow).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`; about 106 bits of precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn powi(self, n: u32) -> Self {
        let mut base = self;
        let mut exp = n;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s0, e0) = two_sum(self.hi, rhs.hi);
        let (s1, e1) = two_sum(self.lo, rhs.lo);
        let (s0, e0) = quick_two_sum(s0, e0 + s1);
        let (hi, lo) = quick_two_sum(s0, e0 + e1);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = self.hi.mul_add(rhs.lo, e);
        let e = self.lo.mul_add(rhs.hi, e);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// A real number stored as `sign * exp(log_mag)`.
///
/// Multipliers in the extremal equation reach 1e18 and beyond while the
/// fields they scale are 1e-20 or smaller; products are formed in the log
/// domain once the direct product would leave the normal range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    /// -1, 0 or +1. Zero means the value is exactly zero and `log_mag` is ignored.
    pub sign: i8,
    pub log_mag: f64,
}

impl SignedLog {
    pub const ZERO: Self = Self {
        sign: 0,
        log_mag: 0.0,
    };

    pub fn new(sign: i8, log_mag: f64) -> Self {
        Self {
            sign: sign.signum(),
            log_mag,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if x > 0.0 { 1 } else { -1 },
                log_mag: x.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Value as `f64`; saturates to +-inf outside the representable range.
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    /// `self * q` with the product formed through logarithms when the
    /// magnitude of `self` is outside `[1e-290, 1e290]`.
    #[inline]
    pub fn mul_f64(&self, q: f64) -> f64 {
        if self.sign == 0 || q == 0.0 {
            return 0.0;
        }
        if self.log_mag.abs() < 667.0 {
            return self.value() * q;
        }
        let sign = f64::from(self.sign) * q.signum();
        sign * (self.log_mag + q.abs().ln()).exp()
    }

    pub fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            log_mag: self.log_mag,
        }
    }

    /// Multiply the magnitude by `factor > 0`.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            sign: self.sign,
            log_mag: self.log_mag + factor.ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ipow_matches_repeated_multiplication() {
        assert_eq!(ipow(2.0, 10), 1024.0);
        assert_eq!(ipow(0.5, 0), 1.0);
        assert_eq!(ipow(-3.0, 3), -27.0);
        let x = 1.1_f64;
        let naive = (0..7).fold(1.0, |acc, _| acc * x);
        assert!((ipow(x, 7) - naive).abs() < 1e-15);
    }

    #[test]
    fn two_sum_and_two_prod_are_exact() {
        let (s, e) = two_sum(1.0, 1e-17);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-17);
        let a = 1.0 + f64::EPSILON;
        let (p, e) = two_prod(a, a);
        // (1+u)^2 = 1 + 2u + u^2; u^2 is lost by the rounded product.
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn double_double_recovers_cancellation() {
        // (1 + 2^-60)^2 - 1 = 2^-59 + 2^-120, invisible in binary64.
        let x = DoubleDouble::from(1.0) + DoubleDouble::from(2f64.powi(-60));
        let d = x * x - DoubleDouble::ONE;
        assert!((d.to_f64() - 2f64.powi(-59)).abs() < 1e-30);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = values.iter().sum();
        let comp = compensated_sum(values.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-20);
    }

    #[test]
    fn signed_log_products() {
        let lam = SignedLog::new(-1, 700.0);
        let q = (-690.0f64).exp();
        let p = lam.mul_f64(q);
        assert!((p + 10f64.exp()).abs() / 10f64.exp() < 1e-10);
        assert_eq!(SignedLog::ZERO.mul_f64(3.0), 0.0);
        let s = SignedLog::from_f64(-2.5);
        assert_eq!(s.sign, -1);
        assert!((s.value() + 2.5).abs() < 1e-15);
        assert!((s.scaled(4.0).value() + 10.0).abs() < 1e-13);
    }
}
