//! QFI matrix over `(λ, ζ)` for `H = λ (a + a†)^ζ`, its reparametrization to
//! `(λ̃, ζ)` and the joint scalar bound with identity weight.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::combinatorics::FromCoeff;
use crate::error::{domain, Error, Result};
use crate::moments::moments_in;
use crate::numeric::{cancellation_digits, checked_difference, Precision, Real};
use crate::probe::ProbeSpec;

/// Medium model: `λ = λ̃ t` is the effective coupling, `ζ` the order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub lambda_eff: f64,
    pub zeta: u32,
    pub time: f64,
}

impl ModelSpec {
    pub fn new(lambda_eff: f64, zeta: u32) -> Result<Self> {
        Self::with_time(lambda_eff, zeta, 1.0)
    }

    pub fn with_time(lambda_eff: f64, zeta: u32, time: f64) -> Result<Self> {
        if zeta == 0 {
            return domain("nonlinearity order must be >= 1");
        }
        if !lambda_eff.is_finite() || lambda_eff < 0.0 {
            return domain(format!("lambda = {lambda_eff} must be finite and >= 0"));
        }
        if !time.is_finite() || time <= 0.0 {
            return domain(format!(
                "interaction time t = {time} must be finite and > 0"
            ));
        }
        Ok(Self {
            lambda_eff,
            zeta,
            time,
        })
    }

    /// Coupling per unit time `λ̃ = λ / t`.
    pub fn lambda_tilde(&self) -> f64 {
        self.lambda_eff / self.time
    }
}

/// Symmetric QFI entries plus the Uhlmann off-diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QfiMatrix {
    pub f_ll: f64,
    pub f_zz: f64,
    pub f_lz: f64,
    pub u_lz: f64,
}

impl QfiMatrix {
    pub fn determinant(&self) -> f64 {
        self.f_ll * self.f_zz - self.f_lz * self.f_lz
    }

    pub fn trace(&self) -> f64 {
        self.f_ll + self.f_zz
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.f_ll >= 0.0 && self.f_zz >= 0.0 && self.determinant() >= -1e-9 * self.f_ll * self.f_zz
    }
}

struct Elements<T> {
    ll: T,
    zz: T,
    lz: T,
    /// Most digits cancelled in forming any one entry.
    lost: f64,
}

fn elements<T: FromCoeff>(
    probe: &ProbeSpec,
    model: &ModelSpec,
    precision: Precision,
) -> Result<Elements<T>> {
    let z = model.zeta;
    let m = moments_in::<T>(probe, &[z - 1, z, 2 * z - 2, 2 * z - 1, 2 * z])?;
    let (g_z1, g_z, g_2z2, g_2z1, g_2z) = (m[0], m[1], m[2], m[3], m[4]);
    let four = T::of(4.0);
    let lz_factor = T::of(model.lambda_eff) * T::of(z as f64);

    let var_l = checked_difference(g_2z, g_z * g_z, precision, "F_λλ")?;
    // G_0 is the identity, so the ζ = 1 variance is zero by convention
    let var_z = if z == 1 {
        T::zero()
    } else {
        checked_difference(g_2z2, g_z1 * g_z1, precision, "F_ζζ")?
    };
    let cov = g_2z1 - g_z * g_z1;
    let lost = cancellation_digits(g_2z, g_z * g_z)
        .max(cancellation_digits(g_2z1, g_z * g_z1))
        .max(if z == 1 {
            0.0
        } else {
            cancellation_digits(g_2z2, g_z1 * g_z1)
        });
    Ok(Elements {
        ll: four * var_l,
        zz: four * lz_factor * lz_factor * var_z,
        lz: four * lz_factor * cov,
        lost,
    })
}

fn assemble<T: Real>(e: &Elements<T>) -> QfiMatrix {
    QfiMatrix {
        f_ll: e.ll.to_f64_lossy(),
        f_zz: e.zz.to_f64_lossy(),
        f_lz: e.lz.to_f64_lossy(),
        // Both generators are powers of the same quadrature, so they commute and
        // ⟨∂_λψ|∂_ζψ⟩ is the expectation of a Hermitian operator: no imaginary part.
        u_lz: 0.0,
    }
}

/// Diagonal QFI entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Lambda,
    Zeta,
}

impl Element {
    pub fn name(self) -> &'static str {
        match self {
            Element::Lambda => "f_lambda",
            Element::Zeta => "f_zeta",
        }
    }
}

fn element_in<T: FromCoeff>(
    probe: &ProbeSpec,
    model: &ModelSpec,
    which: Element,
    precision: Precision,
) -> Result<T> {
    let z = model.zeta;
    let (k, label, factor) = match which {
        Element::Lambda => (z, "F_λλ", T::of(4.0)),
        Element::Zeta => {
            if z == 1 {
                return Ok(T::zero());
            }
            let lz = T::of(model.lambda_eff) * T::of(z as f64);
            (z - 1, "F_ζζ", T::of(4.0) * lz * lz)
        }
    };
    let m = moments_in::<T>(probe, &[k, 2 * k])?;
    Ok(factor * checked_difference(m[1], m[0] * m[0], precision, label)?)
}

/// One diagonal entry in the requested working precision.
pub fn qfi_element_with(
    probe: &ProbeSpec,
    model: &ModelSpec,
    which: Element,
    precision: Precision,
) -> Result<f64> {
    match precision {
        Precision::Double => element_in::<f64>(probe, model, which, precision),
        Precision::Extended => {
            element_in::<TwoFloat>(probe, model, which, precision).map(|v| v.to_f64_lossy())
        }
    }
}

/// Full QFI matrix in the requested working precision.
pub fn qfi_matrix_with(
    probe: &ProbeSpec,
    model: &ModelSpec,
    precision: Precision,
) -> Result<QfiMatrix> {
    match precision {
        Precision::Double => elements::<f64>(probe, model, precision).map(|e| assemble(&e)),
        Precision::Extended => elements::<TwoFloat>(probe, model, precision).map(|e| assemble(&e)),
    }
}

pub fn qfi_matrix(probe: &ProbeSpec, model: &ModelSpec) -> Result<QfiMatrix> {
    qfi_matrix_with(probe, model, Precision::Double)
}

/// `F_λλ = 4 Var(G_ζ)`; does not depend on `λ`.
pub fn qfi_lambda(probe: &ProbeSpec, model: &ModelSpec) -> Result<f64> {
    qfi_element_with(probe, model, Element::Lambda, Precision::Double)
}

/// `F_ζζ = 4 (λζ)² Var(G_{ζ-1})`.
pub fn qfi_zeta(probe: &ProbeSpec, model: &ModelSpec) -> Result<f64> {
    qfi_element_with(probe, model, Element::Zeta, Precision::Double)
}

/// `F_λζ = 4 λζ Cov(G_ζ, G_{ζ-1})`.
pub fn qfi_cross(probe: &ProbeSpec, model: &ModelSpec) -> Result<f64> {
    let z = model.zeta;
    let m = moments_in::<f64>(probe, &[z - 1, z, 2 * z - 1])?;
    Ok(4.0 * model.lambda_eff * z as f64 * (m[2] - m[1] * m[0]))
}

/// QFI with respect to `(λ̃, ζ)`: `B F Bᵀ` with `B = diag(t, 1)`.
pub fn reparametrize_physical(qfi: &QfiMatrix, model: &ModelSpec) -> QfiMatrix {
    let t = model.time;
    QfiMatrix {
        f_ll: t * t * qfi.f_ll,
        f_zz: qfi.f_zz,
        f_lz: t * qfi.f_lz,
        u_lz: t * qfi.u_lz,
    }
}

/// `C_S⁻¹ = det F / tr F` for identity weight.
pub fn scalar_bound_inverse(qfi: &QfiMatrix) -> Result<f64> {
    let trace = qfi.trace();
    if trace == 0.0 {
        return Err(Error::DegenerateModel("F_λλ + F_ζζ = 0".into()));
    }
    let det = qfi.determinant();
    if det == 0.0 {
        return Ok(0.0);
    }
    Ok(det / trace)
}

/// `C_S⁻¹` evaluated from the probe with the determinant formed in working
/// precision, so its cancellation is checked against the precision alarm.
pub fn joint_bound_inverse(
    probe: &ProbeSpec,
    model: &ModelSpec,
    precision: Precision,
) -> Result<f64> {
    match precision {
        Precision::Double => joint_in::<f64>(probe, model, precision),
        Precision::Extended => joint_in::<TwoFloat>(probe, model, precision),
    }
}

fn joint_in<T: FromCoeff>(
    probe: &ProbeSpec,
    model: &ModelSpec,
    precision: Precision,
) -> Result<f64> {
    let e = elements::<T>(probe, model, precision)?;
    let trace = e.ll + e.zz;
    if trace == T::zero() {
        return Err(Error::DegenerateModel("F_λλ + F_ζζ = 0".into()));
    }
    let (a, b) = (e.ll * e.zz, e.lz * e.lz);
    // the entries already carry the error of their own cancellation, which
    // the determinant amplifies; the budget is the sum of both losses
    let digits = e.lost + cancellation_digits(a, b);
    if digits > precision.alarm_digits() {
        return Err(Error::PrecisionLoss {
            quantity: "det F",
            digits,
        });
    }
    Ok(((a - b) / trace).to_f64_lossy())
}
