//! Exact normal-ordering coefficients of `(a + a†)^ζ` and the closed-form
//! sums built from them.
//!
//! `(a + a†)^ζ = Σ_{m ≤ ⌊ζ/2⌋} Σ_{s ≤ ζ-2m} C(ζ,m,s) (a†)^s a^(ζ-2m-s)` with
//! `C(ζ,m,s) = ζ! / (2^m m! s! (ζ-2m-s)!)`. Every coefficient is an integer
//! (choose `2m` of the ζ factors, pair them, pick `s` of the rest to be
//! creation operators), but they are exposed as rationals so that callers can
//! mix them with the 2^(ζ-3k) row sums without rounding.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use twofloat::TwoFloat;

use crate::error::{domain, Error, Result};
use crate::numeric::Real;

/// A single coefficient `C(ζ, m, s)` together with its indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderingCoeff {
    pub zeta: u32,
    pub m: u32,
    pub s: u32,
    pub value: BigRational,
}

impl OrderingCoeff {
    pub fn new(zeta: u32, m: u32, s: u32) -> Result<Self> {
        let value = normal_order_coeff(zeta, m, s)?;
        Ok(Self { zeta, m, s, value })
    }
}

pub(crate) fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn check_indices(zeta: u32, m: u32, s: u32) -> Result<()> {
    if m > zeta / 2 {
        return domain(format!(
            "m = {m} exceeds floor(zeta/2) = {} for zeta = {zeta}",
            zeta / 2
        ));
    }
    if s > zeta - 2 * m {
        return domain(format!(
            "s = {s} exceeds zeta - 2m = {} for zeta = {zeta}, m = {m}",
            zeta - 2 * m
        ));
    }
    Ok(())
}

/// Integer value of `C(ζ, m, s)`; indices must already be validated.
pub(crate) fn coeff_integer(zeta: u32, m: u32, s: u32) -> BigInt {
    let denom =
        (BigInt::one() << m as usize) * factorial(m) * factorial(s) * factorial(zeta - 2 * m - s);
    factorial(zeta) / denom
}

/// `C(ζ, m, s) = ζ! / (2^m m! s! (ζ-2m-s)!)`, exactly.
pub fn normal_order_coeff(zeta: u32, m: u32, s: u32) -> Result<BigRational> {
    check_indices(zeta, m, s)?;
    let num = factorial(zeta);
    let den =
        (BigInt::one() << m as usize) * factorial(m) * factorial(s) * factorial(zeta - 2 * m - s);
    Ok(BigRational::new(num, den))
}

/// `Σ_s C(ζ, k, s) = 2^(ζ-3k) ζ! / (k! (ζ-2k)!)`.
///
/// The closed form is cross-checked against the direct sum on every call and
/// a mismatch is reported as a consistency error.
pub fn coeff_row_sum(zeta: u32, k: u32) -> Result<BigRational> {
    if k > zeta / 2 {
        return domain(format!(
            "k = {k} exceeds floor(zeta/2) = {} for zeta = {zeta}",
            zeta / 2
        ));
    }
    let ratio =
        BigRational::from_integer(factorial(zeta) / (factorial(k) * factorial(zeta - 2 * k)));
    let exp = zeta as i64 - 3 * k as i64;
    let pow2 = BigInt::one() << exp.unsigned_abs() as usize;
    let closed = if exp >= 0 {
        ratio * BigRational::from_integer(pow2)
    } else {
        ratio / BigRational::from_integer(pow2)
    };

    let direct = (0..=zeta - 2 * k)
        .map(|s| normal_order_coeff(zeta, k, s))
        .try_fold(BigRational::zero(), |acc, c| c.map(|c| acc + c))?;
    if direct != closed {
        return Err(Error::Consistency(format!(
            "row sum for zeta = {zeta}, k = {k}: closed form {closed} != direct sum {direct}"
        )));
    }
    Ok(closed)
}

/// Low-energy amplitude `A(ζ)`: `(2ζ)!/ζ!` for odd ζ and
/// `(2ζ)!/ζ! - [ζ!/(ζ/2)!]²` for even ζ.
pub fn amplitude_a(zeta: u32) -> Result<BigInt> {
    if zeta == 0 {
        return domain("A(zeta) is defined for zeta >= 1");
    }
    let lead = factorial(2 * zeta) / factorial(zeta);
    if zeta % 2 == 1 {
        Ok(lead)
    } else {
        let half = factorial(zeta) / factorial(zeta / 2);
        Ok(lead - &half * &half)
    }
}

/// High-energy prefactor `B_γ(ζ) = 4^(3ζ-1) ζ² (1-γ)^(ζ-1) γ^(2ζ-1)`.
pub fn scaling_b(zeta: u32, gamma: f64) -> Result<f64> {
    if zeta == 0 {
        return domain("B_gamma(zeta) is defined for zeta >= 1");
    }
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma = {gamma} outside [0, 1]"));
    }
    let z = zeta as i32;
    Ok(4f64.powi(3 * z - 1) * (z * z) as f64 * (1.0 - gamma).powi(z - 1) * gamma.powi(2 * z - 1))
}

/// Coefficient converted once to each working precision.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CoeffEntry {
    pub double: f64,
    pub extended: TwoFloat,
}

pub(crate) trait FromCoeff: Real {
    fn from_entry(entry: &CoeffEntry) -> Self;
}

impl FromCoeff for f64 {
    fn from_entry(entry: &CoeffEntry) -> Self {
        entry.double
    }
}

impl FromCoeff for TwoFloat {
    fn from_entry(entry: &CoeffEntry) -> Self {
        entry.extended
    }
}

/// Largest order kept in the process-wide coefficient table.
const TABLE_MAX_ORDER: u32 = 64;

type CoeffTable = Vec<Vec<Vec<CoeffEntry>>>;

fn entry_for(zeta: u32, m: u32, s: u32) -> CoeffEntry {
    let c = coeff_integer(zeta, m, s);
    CoeffEntry {
        double: f64::from_bigint(&c),
        extended: TwoFloat::from_bigint(&c),
    }
}

fn table() -> &'static CoeffTable {
    static TABLE: OnceLock<CoeffTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=TABLE_MAX_ORDER)
            .map(|z| {
                (0..=z / 2)
                    .map(|m| (0..=z - 2 * m).map(|s| entry_for(z, m, s)).collect())
                    .collect()
            })
            .collect()
    })
}

/// All coefficients of order ζ, indexed `[m][s]`.
pub(crate) fn coeff_rows<T: FromCoeff>(zeta: u32) -> Vec<Vec<T>> {
    if zeta <= TABLE_MAX_ORDER {
        table()[zeta as usize]
            .iter()
            .map(|row| row.iter().map(T::from_entry).collect())
            .collect()
    } else {
        (0..=zeta / 2)
            .map(|m| {
                (0..=zeta - 2 * m)
                    .map(|s| T::from_entry(&entry_for(zeta, m, s)))
                    .collect()
            })
            .collect()
    }
}
