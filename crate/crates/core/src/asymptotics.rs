//! Small-N and large-N approximations of the QFIs and the large-N optimal
//! squeezing fraction. Used as diagnostics and optimizer overlays only.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{amplitude_a, scaling_b};
use crate::error::{domain, Result};
pub use crate::qfi::Element;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    LowEnergy,
    HighEnergy,
}

/// Which expansion applies, with a rough bound on `N` for its validity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub validity_hint: f64,
}

impl Regime {
    pub const LOW: Regime = Regime {
        kind: RegimeKind::LowEnergy,
        validity_hint: 1e-2,
    };
    pub const HIGH: Regime = Regime {
        kind: RegimeKind::HighEnergy,
        validity_hint: 1e3,
    };

    /// `LOW` below its hint, `HIGH` above its hint, `None` in between.
    pub fn classify(n_total: f64) -> Option<Regime> {
        if n_total <= Self::LOW.validity_hint {
            Some(Self::LOW)
        } else if n_total >= Self::HIGH.validity_hint {
            Some(Self::HIGH)
        } else {
            None
        }
    }
}

fn a_over_power(zeta: u32) -> Result<f64> {
    let a = amplitude_a(zeta)?.to_f64().unwrap_or(f64::INFINITY);
    Ok(a / 2f64.powi(zeta as i32))
}

fn check_n(n_total: f64, gamma: f64) -> Result<()> {
    if !n_total.is_finite() || n_total < 0.0 {
        return domain(format!("N = {n_total} must be finite and >= 0"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma = {gamma} outside [0, 1]"));
    }
    Ok(())
}

/// `F_λλ ≈ 4 A(ζ)/2^ζ (1 + 2ζ √(γN))`.
pub fn qfi_lambda_low_n(n_total: f64, gamma: f64, zeta: u32) -> Result<f64> {
    check_n(n_total, gamma)?;
    Ok(4.0 * a_over_power(zeta)? * (1.0 + 2.0 * zeta as f64 * (gamma * n_total).sqrt()))
}

/// `F_ζζ ≈ 4 λ²ζ² A(ζ-1)/2^(ζ-1) (1 + 2(ζ-1) √(γN))`.
pub fn qfi_zeta_low_n(n_total: f64, gamma: f64, zeta: u32, lambda_eff: f64) -> Result<f64> {
    check_n(n_total, gamma)?;
    if zeta < 2 {
        return domain("low-N expansion of F_ζζ needs ζ >= 2");
    }
    let lz = lambda_eff * zeta as f64;
    Ok(4.0
        * lz
        * lz
        * a_over_power(zeta - 1)?
        * (1.0 + 2.0 * (zeta - 1) as f64 * (gamma * n_total).sqrt()))
}

/// Leading large-N term: `B_γ(ζ) N^(3ζ-2)` for `F_λλ`,
/// `λ²ζ² B_γ(ζ-1) N^(3ζ-5)` for `F_ζζ`.
pub fn qfi_high_n(
    n_total: f64,
    gamma: f64,
    zeta: u32,
    which: Element,
    lambda_eff: f64,
) -> Result<f64> {
    check_n(n_total, gamma)?;
    if n_total == 0.0 {
        return domain("large-N expansion needs N > 0");
    }
    match which {
        Element::Lambda => Ok(scaling_b(zeta, gamma)? * n_total.powi(3 * zeta as i32 - 2)),
        Element::Zeta => {
            if zeta < 2 {
                return domain("large-N expansion of F_ζζ needs ζ >= 2");
            }
            let lz = lambda_eff * zeta as f64;
            Ok(lz * lz * scaling_b(zeta - 1, gamma)? * n_total.powi(3 * zeta as i32 - 5))
        }
    }
}

/// `(2ζ - 1)/(3ζ - 1)`, the published large-N optimum.
///
/// Only stated for `ζ >= 2`; see [`in_published_scope`].
pub fn gamma_opt_high_n(zeta: u32) -> Result<f64> {
    if zeta == 0 {
        return domain("nonlinearity order must be >= 1");
    }
    let z = zeta as f64;
    Ok((2.0 * z - 1.0) / (3.0 * z - 1.0))
}

/// Whether `gamma_opt_high_n(ζ)` is within the range the formula was given for.
pub fn in_published_scope(zeta: u32) -> bool {
    zeta >= 2
}

/// Exact maximizer of `γ^(2ζ-1) (1-γ)^(ζ-1)`, i.e. of the leading large-N term:
/// `(2ζ - 1)/(3ζ - 2)`.
pub fn gamma_argmax_high_n(zeta: u32) -> Result<f64> {
    if zeta == 0 {
        return domain("nonlinearity order must be >= 1");
    }
    let z = zeta as f64;
    Ok((2.0 * z - 1.0) / (3.0 * z - 2.0))
}
