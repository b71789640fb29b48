//! Floating-point plumbing shared by the closed-form and oracle paths: the
//! double / double-double precision switch, compensated summation and the
//! cancellation alarm.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Arithmetic used when evaluating moments and the differences built from them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// IEEE double precision (~16 significant digits).
    #[default]
    Double,
    /// Double-double arithmetic (~31 significant digits).
    Extended,
}

impl Precision {
    /// Agreement (in significant digits) between the two terms of a variance at
    /// which the result is flagged as unreliable.
    pub fn alarm_digits(self) -> f64 {
        match self {
            Precision::Double => 12.0,
            Precision::Extended => 27.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

/// Scalar type the moment sums can be carried in.
pub(crate) trait Real: Float + Send + Sync + Debug + 'static {
    fn of(x: f64) -> Self;
    fn to_f64_lossy(self) -> f64;
    fn from_bigint(n: &BigInt) -> Self;
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    fn from_bigint(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl Real for TwoFloat {
    #[inline]
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.hi() + self.lo()
    }

    fn from_bigint(n: &BigInt) -> Self {
        let hi = n.to_f64().unwrap_or(f64::INFINITY);
        if !hi.is_finite() {
            return TwoFloat::from(hi);
        }
        let rest = n - BigInt::from_f64(hi).expect("finite f64 is an integer-valued BigInt");
        TwoFloat::new_add(hi, rest.to_f64().unwrap_or(0.0))
    }
}

/// Neumaier-compensated sum of `terms`, added in order of decreasing magnitude.
pub(crate) fn compensated_sum<T: Real>(terms: &mut [T]) -> T {
    terms.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sum = T::zero();
    let mut carry = T::zero();
    for &t in terms.iter() {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry = carry + ((sum - next) + t);
        } else {
            carry = carry + ((t - next) + sum);
        }
        sum = next;
    }
    sum + carry
}

/// Significant digits shared by `a` and `b`, i.e. lost when forming `a - b`.
/// Zero when both are exactly zero.
pub(crate) fn cancellation_digits<T: Real>(a: T, b: T) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        return 0.0;
    }
    let rel = ((a - b).abs() / scale).to_f64_lossy();
    if rel == 0.0 {
        f64::INFINITY
    } else {
        (-rel.log10()).max(0.0)
    }
}

/// Returns `a - b`, or `PrecisionLoss` if the two agree to more significant
/// digits than `precision` tolerates. Exact zeros on both sides are allowed.
pub(crate) fn checked_difference<T: Real>(
    a: T,
    b: T,
    precision: Precision,
    quantity: &'static str,
) -> Result<T> {
    let diff = a - b;
    let digits = cancellation_digits(a, b);
    if digits > precision.alarm_digits() {
        return Err(Error::PrecisionLoss { quantity, digits });
    }
    Ok(diff)
}

/// Relative difference with a floor of 1 on the denominator.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(&mut terms), 2.0);
    }

    #[test]
    fn twofloat_bigint_conversion_keeps_low_bits() {
        let n = BigInt::from(2u64).pow(60) + BigInt::from(3);
        let x = TwoFloat::from_bigint(&n);
        assert_eq!(x.hi(), 2f64.powi(60));
        assert_eq!(x.lo(), 3.0);
    }

    #[test]
    fn alarm_fires_only_past_threshold() {
        assert!(checked_difference(1.0, 1.0 - 1e-8, Precision::Double, "x").is_ok());
        assert!(matches!(
            checked_difference(1.0, 1.0 - 1e-14, Precision::Double, "x"),
            Err(Error::PrecisionLoss { .. })
        ));
        assert_eq!(
            checked_difference(0.0, 0.0, Precision::Double, "x"),
            Ok(0.0)
        );
        let a = TwoFloat::from(1.0);
        let b = a - TwoFloat::from(1e-20);
        assert!(checked_difference(a, b, Precision::Extended, "x").is_ok());
    }
}
