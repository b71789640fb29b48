//! Gaussian probes `|α, ξ⟩` in the energy parametrization `(N, γ, θ, φ)`.
//!
//! `N = |α|² + sinh² r` is the mean photon number, `γ = sinh² r / N` the
//! squeezing fraction, `ξ = r e^{iθ}` the squeezing and `α = |α| e^{iφ}` the
//! coherent amplitude. The Bogoliubov quantities `μ = cosh r`,
//! `ν = e^{iθ} sinh r`, `η = |μ + ν|`, `ψ = Arg(μ + ν*)` and the amplitude `β`
//! feed the closed-form moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// How the coherent amplitude enters the closed-form moments.
///
/// The moment formula evaluates `⟨β| S†(ξ) (a + a†)^k S(ξ) |β⟩`, i.e. moments
/// of the state `S(ξ) D(β) |0⟩ = D(μβ + νβ*) S(ξ) |0⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeConvention {
    /// `β = μα + να*`. This is the amplitude behind the published optimal-probe
    /// results (thresholds, large-N scaling). The state it describes is
    /// `D(cosh 2r α + e^{iθ} sinh 2r α*) S(ξ)|0⟩`, whose mean photon number
    /// exceeds `N` whenever both `α` and `r` are non-zero.
    #[default]
    Reference,
    /// `β = μα - να*`, so the state is exactly `D(α) S(ξ)|0⟩` with mean
    /// photon number `N`.
    EnergyExact,
}

impl ProbeConvention {
    pub fn name(self) -> &'static str {
        match self {
            ProbeConvention::Reference => "reference",
            ProbeConvention::EnergyExact => "energy-exact",
        }
    }
}

/// Validated probe in the energy parametrization. Phases are stored as given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub n_total: f64,
    pub gamma: f64,
    pub theta: f64,
    pub phi: f64,
    pub convention: ProbeConvention,
}

/// Bogoliubov quantities of a probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BogoliubovView {
    pub mu: f64,
    pub nu: Complex64,
    pub beta: Complex64,
    pub eta: f64,
    pub psi: f64,
}

/// Builds a probe with the reference convention; see [`ProbeSpec::new`].
pub fn make_probe(n_total: f64, gamma: f64, theta: f64, phi: f64) -> Result<ProbeSpec> {
    ProbeSpec::new(n_total, gamma, theta, phi)
}

impl ProbeSpec {
    pub fn new(n_total: f64, gamma: f64, theta: f64, phi: f64) -> Result<Self> {
        if !n_total.is_finite() || n_total < 0.0 {
            return domain(format!(
                "mean photon number N = {n_total} must be finite and >= 0"
            ));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return domain(format!("squeezing fraction gamma = {gamma} outside [0, 1]"));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return domain("phases must be finite");
        }
        Ok(Self {
            n_total,
            gamma,
            theta,
            phi,
            convention: ProbeConvention::Reference,
        })
    }

    pub fn vacuum() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0).expect("vacuum is valid")
    }

    pub fn coherent(n_total: f64, phi: f64) -> Result<Self> {
        Self::new(n_total, 0.0, 0.0, phi)
    }

    pub fn squeezed_vacuum(n_total: f64, theta: f64) -> Result<Self> {
        Self::new(n_total, 1.0, theta, 0.0)
    }

    pub fn with_convention(mut self, convention: ProbeConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Same probe with the squeezing fraction replaced.
    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Ok(Self::new(self.n_total, gamma, self.theta, self.phi)?.with_convention(self.convention))
    }

    /// Squeezing photons `N_sq = γN = sinh² r`.
    pub fn squeezing_photons(&self) -> f64 {
        self.gamma * self.n_total
    }

    /// Coherent photons `N_ch = (1-γ)N = |α|²`.
    pub fn coherent_photons(&self) -> f64 {
        ((1.0 - self.gamma) * self.n_total).max(0.0)
    }

    pub fn squeezing_radius(&self) -> f64 {
        self.squeezing_photons().sqrt().asinh()
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.coherent_photons().sqrt(), self.phi)
    }

    pub fn xi(&self) -> Complex64 {
        Complex64::from_polar(self.squeezing_radius(), self.theta)
    }

    pub fn bogoliubov(&self) -> BogoliubovView {
        bogoliubov_view(self)
    }

    /// Displacement `δ` such that the closed-form moments are those of
    /// `D(δ) S(ξ) |0⟩`.
    pub fn displacement(&self) -> Complex64 {
        let v = self.bogoliubov();
        v.beta * v.mu + v.nu * v.beta.conj()
    }

    /// Nominal energy `|α|² + sinh² r`; equals `n_total`.
    pub fn nominal_energy(&self) -> f64 {
        self.alpha().norm_sqr() + self.squeezing_radius().sinh().powi(2)
    }

    /// Mean photon number of the state the closed-form moments describe.
    pub fn state_energy(&self) -> f64 {
        self.displacement().norm_sqr() + self.squeezing_photons()
    }
}

pub fn bogoliubov_view(probe: &ProbeSpec) -> BogoliubovView {
    let r = probe.squeezing_radius();
    let mu = r.cosh();
    // sinh(asinh x) = x exactly in exact arithmetic; use the input directly
    let nu = Complex64::from_polar(probe.squeezing_photons().sqrt(), probe.theta);
    let alpha = probe.alpha();
    let beta = match probe.convention {
        ProbeConvention::Reference => alpha * mu + nu * alpha.conj(),
        ProbeConvention::EnergyExact => alpha * mu - nu * alpha.conj(),
    };
    let eta = (nu + mu).norm();
    let psi = (nu.conj() + mu).arg();
    BogoliubovView {
        mu,
        nu,
        beta,
        eta,
        psi,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::error::Error;

    #[test]
    fn constructor_examples() {
        let vac = make_probe(0.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(vac.alpha(), Complex64::new(0.0, 0.0));
        assert_eq!(vac.squeezing_radius(), 0.0);

        let sq = make_probe(3.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(sq.coherent_photons(), 0.0);
        assert_relative_eq!(
            sq.squeezing_radius(),
            3f64.sqrt().asinh(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sq.squeezing_radius().sinh().powi(2),
            3.0,
            max_relative = 1e-14
        );

        let coh = make_probe(2.0, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(coh.alpha().norm_sqr(), 2.0, max_relative = 1e-15);
        assert_eq!(coh.squeezing_radius(), 0.0);
    }

    #[test]
    fn invalid_probes_are_rejected() {
        assert!(matches!(
            make_probe(-1.0, 0.5, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_probe(1.0, 1.5, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_probe(1.0, -0.1, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_probe(f64::NAN, 0.5, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_probe(1.0, 0.5, f64::INFINITY, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bogoliubov_examples() {
        let v = ProbeSpec::vacuum().bogoliubov();
        assert_eq!(
            (v.mu, v.nu, v.beta, v.eta, v.psi),
            (
                1.0,
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                1.0,
                0.0
            )
        );

        let v = ProbeSpec::squeezed_vacuum(3.0, 0.0).unwrap().bogoliubov();
        assert_relative_eq!(v.mu, 2.0, max_relative = 1e-14);
        assert_relative_eq!(v.nu.re, 3f64.sqrt(), max_relative = 1e-15);
        assert_eq!(v.beta, Complex64::new(0.0, 0.0));
        assert_relative_eq!(v.eta, 2.0 + 3f64.sqrt(), max_relative = 1e-14);

        let v = ProbeSpec::coherent(4.0, 0.0).unwrap().bogoliubov();
        assert_eq!(v.mu, 1.0);
        assert_eq!(v.nu, Complex64::new(0.0, 0.0));
        assert_relative_eq!(v.beta.re, 2.0, max_relative = 1e-15);
        assert_eq!(v.eta, 1.0);
        assert_eq!(v.psi, 0.0);
    }

    #[test]
    fn real_axis_bogoliubov() {
        let p = ProbeSpec::new(2.0, 0.4, 0.0, 0.0).unwrap();
        let r = p.squeezing_radius();
        let a = p.coherent_photons().sqrt();
        let v = p.bogoliubov();
        assert_relative_eq!(v.beta.re, a * r.exp(), max_relative = 1e-14);
        assert_relative_eq!(v.eta, r.exp(), max_relative = 1e-14);
        assert_eq!(v.psi, 0.0);

        let v = p.with_convention(ProbeConvention::EnergyExact).bogoliubov();
        assert_relative_eq!(v.beta.re, a * (-r).exp(), max_relative = 1e-14);
    }

    #[test]
    fn energy_exact_displacement_is_alpha() {
        let p = ProbeSpec::new(1.7, 0.35, 0.8, -2.1)
            .unwrap()
            .with_convention(ProbeConvention::EnergyExact);
        let d = p.displacement();
        assert!((d - p.alpha()).norm() < 1e-14);
        assert_relative_eq!(p.state_energy(), 1.7, max_relative = 1e-14);
    }

    #[test]
    fn reference_displacement_is_double_bogoliubov() {
        let p = ProbeSpec::new(1.7, 0.35, 0.8, -2.1).unwrap();
        let r = p.squeezing_radius();
        let a = p.alpha();
        let expected =
            a * (2.0 * r).cosh() + Complex64::from_polar((2.0 * r).sinh(), p.theta) * a.conj();
        assert!((p.displacement() - expected).norm() < 1e-13);
        assert!(p.state_energy() > p.n_total);
    }

    proptest! {
        #[test]
        fn hyperbolic_identity(n in 0.0..1e3f64, g in 0.0..=1.0f64, th in -10.0..10.0f64, ph in -10.0..10.0f64) {
            let v = ProbeSpec::new(n, g, th, ph).unwrap().bogoliubov();
            let lhs = v.mu * v.mu - v.nu.norm_sqr();
            prop_assert!((lhs - 1.0).abs() <= 1e-12 * v.mu * v.mu);
        }

        #[test]
        fn nominal_energy_round_trip(n in 0.0..1e3f64, g in 0.0..=1.0f64, th in -10.0..10.0f64, ph in -10.0..10.0f64) {
            let p = ProbeSpec::new(n, g, th, ph).unwrap();
            prop_assert!((p.nominal_energy() - n).abs() <= 1e-12 * n.max(1e-300));
        }
    }

    #[test]
    fn endpoint_continuity() {
        let n = 2.5;
        let near0 = ProbeSpec::new(n, 1e-12, 0.3, 0.4).unwrap().bogoliubov();
        let at0 = ProbeSpec::new(n, 0.0, 0.3, 0.4).unwrap().bogoliubov();
        assert!((near0.beta - at0.beta).norm() < 1e-5);
        assert!((near0.eta - at0.eta).abs() < 1e-5);
        let near1 = ProbeSpec::new(n, 1.0 - 1e-12, 0.3, 0.4)
            .unwrap()
            .bogoliubov();
        let at1 = ProbeSpec::new(n, 1.0, 0.3, 0.4).unwrap().bogoliubov();
        assert!((near1.beta - at1.beta).norm() < 1e-5);
        assert!((near1.mu - at1.mu).abs() < 1e-10);
    }
}
