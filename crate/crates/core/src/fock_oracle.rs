//! Brute-force backend on a truncated Fock space.
//!
//! States are built by applying the squeezing and displacement exponentials to
//! the vacuum vector. Inner products that feed the QFI are accumulated in
//! double-double so that the variances and the Uhlmann element are not limited
//! by the size of `X^ζ|ψ⟩`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::numeric::Real;
use crate::probe::ProbeSpec;
use crate::qfi::{ModelSpec, QfiMatrix};

/// Largest cutoff the oracle will use.
pub const MAX_DIM: usize = 4096;

const TAIL_TOLERANCE: f64 = 1e-12;
const NORM_TOLERANCE: f64 = 1e-10;
const STABILITY_TOLERANCE: f64 = 1e-9;
const HERMITICITY_TOLERANCE: f64 = 1e-9;

type Dd = Complex<TwoFloat>;

/// Dense operator on the first `dim` Fock states.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    pub dim: usize,
    pub entries: DMatrix<Complex64>,
}

impl TruncatedOperator {
    pub fn annihilation(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        Self { dim, entries: m }
    }

    pub fn creation(dim: usize) -> Self {
        let a = Self::annihilation(dim);
        Self {
            dim,
            entries: a.entries.adjoint(),
        }
    }

    /// `X = A + A†`.
    pub fn quadrature(dim: usize) -> Self {
        let a = Self::annihilation(dim);
        Self {
            dim,
            entries: &a.entries + a.entries.adjoint(),
        }
    }

    /// `max |M - M†|`.
    pub fn hermiticity_residue(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |U†U - I|` over the block that excludes the top eighth of the basis.
    pub fn unitarity_defect(&self) -> f64 {
        let keep = guarded(self.dim);
        let prod = self.entries.adjoint() * &self.entries;
        let mut worst: f64 = 0.0;
        for i in 0..keep {
            for j in 0..keep {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn apply(&self, state: &TruncatedState) -> TruncatedState {
        TruncatedState {
            dim: self.dim,
            amplitudes: &self.entries * &state.amplitudes,
            extended: Vec::new(),
        }
    }
}

/// Pure state on the first `dim` Fock states.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedState {
    pub dim: usize,
    pub amplitudes: DVector<Complex64>,
    /// Double-double amplitudes when the builder produced them, else empty.
    extended: Vec<Dd>,
}

impl TruncatedState {
    pub fn vacuum(dim: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[0] = Complex64::new(1.0, 0.0);
        Self {
            dim,
            amplitudes: v,
            extended: Vec::new(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability carried by the top eighth of the basis.
    pub fn tail_mass(&self) -> f64 {
        self.amplitudes
            .iter()
            .skip(guarded(self.dim))
            .map(|c| c.norm_sqr())
            .sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// Same amplitudes embedded in a larger space.
    pub fn padded(&self, dim: usize) -> Self {
        let mut v = DVector::zeros(dim.max(self.dim));
        v.rows_mut(0, self.dim).copy_from(&self.amplitudes);
        let mut extended = self.extended.clone();
        if !extended.is_empty() {
            extended.resize(v.len(), dd_zero());
        }
        Self {
            dim: v.len(),
            amplitudes: v,
            extended,
        }
    }
}

fn guarded(dim: usize) -> usize {
    dim - dim.div_ceil(8)
}

/// Cutoff heuristic from the mean photon number of the state actually built.
pub fn suggested_dim(probe: &ProbeSpec, model: &ModelSpec) -> usize {
    let n = probe.state_energy();
    let z = model.zeta as f64;
    let raw = (8.0 * (n + z + model.lambda_eff * z * n.sqrt())).ceil();
    let raw = if raw.is_finite() {
        raw as usize
    } else {
        usize::MAX
    };
    raw.max(64)
        .checked_next_power_of_two()
        .unwrap_or(usize::MAX)
}

fn dd_zero() -> Dd {
    Dd::new(TwoFloat::from(0.0), TwoFloat::from(0.0))
}

fn dd_of(z: Complex64) -> Dd {
    Dd::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

/// `out = ξ/2 a†² v - ξ*/2 a² v`, truncated.
fn squeeze_generator(v: &[Dd], xi: Dd, sq: &[TwoFloat]) -> Vec<Dd> {
    let d = v.len();
    let half = xi * TwoFloat::from(0.5);
    let mut out = vec![dd_zero(); d];
    for n in 0..d {
        if n >= 2 {
            out[n] += half * (sq[n] * sq[n - 1]) * v[n - 2];
        }
        if n + 2 < d {
            out[n] -= half.conj() * (sq[n + 1] * sq[n + 2]) * v[n + 2];
        }
    }
    out
}

/// `out = δ a† v - δ* a v`, truncated.
fn displacement_generator(v: &[Dd], delta: Dd, sq: &[TwoFloat]) -> Vec<Dd> {
    let d = v.len();
    let mut out = vec![dd_zero(); d];
    for n in 0..d {
        if n >= 1 {
            out[n] += delta * sq[n] * v[n - 1];
        }
        if n + 1 < d {
            out[n] -= delta.conj() * sq[n + 1] * v[n + 1];
        }
    }
    out
}

/// Largest `‖hK‖` per Taylor sub-step. Terms can then grow to about `e^16`,
/// which costs 7 of the ~32 double-double digits.
const STEP_NORM: f64 = 16.0;

/// `exp(K) v` by Taylor series on equal sub-steps, where `bound` bounds the
/// norm of `K`. Runs in double-double: rounding noise in the amplitudes is
/// otherwise amplified by high quadrature powers.
fn expm_apply(v: &[Dd], bound: f64, generator: impl Fn(&[Dd]) -> Vec<Dd>) -> Vec<Dd> {
    let steps = (bound / STEP_NORM).ceil().max(1.0) as usize;
    let h = TwoFloat::from(1.0) / TwoFloat::from(steps as f64);
    let mut acc = v.to_vec();
    for _ in 0..steps {
        let mut term = acc.clone();
        let mut next = acc.clone();
        for j in 1..200 {
            term = generator(&term);
            let scale = h / TwoFloat::from(j as f64);
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(next.iter_mut()) {
                *t *= scale;
                *n += *t;
                size += t.re.hi() * t.re.hi() + t.im.hi() * t.im.hi();
            }
            if size.sqrt() <= 1e-34 {
                break;
            }
        }
        acc = next;
    }
    acc
}

/// `D(δ) S(ξ)|0⟩` where `δ` is the probe's effective displacement.
///
/// `S(ξ) = exp(½(ξ a†² - ξ* a²))`, `D(δ) = exp(δ a† - δ* a)`.
pub fn build_state(probe: &ProbeSpec, dim: usize) -> Result<TruncatedState> {
    if dim < 2 {
        return Err(Error::CutoffTooSmall { dim, suggested: 64 });
    }
    let sq: Vec<TwoFloat> = (0..=dim).map(|n| TwoFloat::from(n as f64).sqrt()).collect();
    let xi = probe.xi();
    let delta = probe.displacement();
    let mut v = vec![dd_zero(); dim];
    v[0] = Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    if xi.norm() > 0.0 {
        let x = dd_of(xi);
        v = expm_apply(&v, xi.norm() * dim as f64, |u| squeeze_generator(u, x, &sq));
    }
    if delta.norm() > 0.0 {
        let d = dd_of(delta);
        v = expm_apply(&v, 2.0 * delta.norm() * (dim as f64).sqrt(), |u| {
            displacement_generator(u, d, &sq)
        });
    }
    let mut squares: Vec<TwoFloat> = v.iter().map(|c| c.re * c.re + c.im * c.im).collect();
    let norm = crate::numeric::compensated_sum(&mut squares).sqrt();
    let extended: Vec<Dd> = v.iter().map(|c| *c / norm).collect();
    let state = TruncatedState {
        dim,
        amplitudes: DVector::from_iterator(
            dim,
            extended
                .iter()
                .map(|c| Complex64::new(c.re.to_f64_lossy(), c.im.to_f64_lossy())),
        ),
        extended,
    };
    if state.tail_mass() > TAIL_TOLERANCE || (norm.to_f64_lossy() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::CutoffTooSmall {
            dim,
            suggested: 2 * dim,
        });
    }
    Ok(state)
}

/// Builds the probe state at the heuristic cutoff, doubling until it passes
/// the truncation checks.
pub fn build_state_auto(probe: &ProbeSpec, model: &ModelSpec) -> Result<TruncatedState> {
    let mut dim = suggested_dim(probe, model).min(MAX_DIM);
    loop {
        match build_state(probe, dim) {
            Err(Error::CutoffTooSmall { .. }) if dim < MAX_DIM => dim *= 2,
            other => return other,
        }
    }
}

fn promote(state: &TruncatedState, dim: usize) -> Vec<Dd> {
    let mut v: Vec<Dd> = if state.extended.is_empty() {
        state.amplitudes.iter().map(|c| dd_of(*c)).collect()
    } else {
        state.extended.clone()
    };
    v.resize(dim, dd_zero());
    v
}

struct Quadrature {
    sq: Vec<TwoFloat>,
}

impl Quadrature {
    fn new(dim: usize) -> Self {
        Self {
            sq: (0..=dim).map(|n| TwoFloat::from(n as f64).sqrt()).collect(),
        }
    }

    fn apply(&self, v: &[Dd]) -> Vec<Dd> {
        let d = v.len();
        (0..d)
            .map(|n| {
                let mut acc = Dd::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
                if n >= 1 {
                    acc += v[n - 1] * self.sq[n];
                }
                if n + 1 < d {
                    acc += v[n + 1] * self.sq[n + 1];
                }
                acc
            })
            .collect()
    }

    /// `[v, Xv, X²v, ..., X^k v]`.
    fn powers(&self, v: Vec<Dd>, k: u32) -> Vec<Vec<Dd>> {
        let mut out = vec![v];
        for _ in 0..k {
            let next = self.apply(out.last().expect("non-empty"));
            out.push(next);
        }
        out
    }
}

/// `⟨u|v⟩` in double-double.
fn inner(u: &[Dd], v: &[Dd]) -> Dd {
    let mut re = Vec::with_capacity(u.len() * 2);
    let mut im = Vec::with_capacity(u.len() * 2);
    for (a, b) in u.iter().zip(v) {
        re.push(a.re * b.re);
        re.push(a.im * b.im);
        im.push(a.re * b.im);
        im.push(-(a.im * b.re));
    }
    Dd::new(
        crate::numeric::compensated_sum(&mut re),
        crate::numeric::compensated_sum(&mut im),
    )
}

fn moment_at(state: &TruncatedState, dim: usize, k: u32) -> f64 {
    let x = Quadrature::new(dim);
    let pw = x.powers(promote(state, dim), k.div_ceil(2));
    inner(&pw[(k / 2) as usize], &pw[k.div_ceil(2) as usize])
        .re
        .to_f64_lossy()
}

fn check_stable(dim: usize, pairs: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in pairs {
        if (a - b).abs() > STABILITY_TOLERANCE * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::CutoffTooSmall {
                dim,
                suggested: 2 * dim,
            });
        }
    }
    Ok(())
}

/// `⟨ψ|X^k|ψ⟩`, checked against the same state zero-padded to twice the cutoff.
pub fn expectation_moment(state: &TruncatedState, k: u32) -> Result<f64> {
    let here = moment_at(state, state.dim, k);
    let wide = moment_at(state, 2 * state.dim, k);
    check_stable(state.dim, &[(here, wide)])?;
    Ok(here)
}

/// QFI and Uhlmann entries from `|∂_λψ⟩ = -i X^ζ|ψ⟩`, `|∂_ζψ⟩ = -iλζ X^{ζ-1}|ψ⟩`.
///
/// The evolution is a function of `X` and so commutes with both generators;
/// the matrix does not depend on `λ` through the state and is evaluated on
/// the probe itself.
fn qfi_at(state: &TruncatedState, model: &ModelSpec, dim: usize) -> QfiMatrix {
    let z = model.zeta;
    let x = Quadrature::new(dim);
    let pw = x.powers(promote(state, dim), z);
    let psi = &pw[0];
    let lz = TwoFloat::from(model.lambda_eff) * TwoFloat::from(z as f64);
    let g_l = &pw[z as usize];
    let g_z: Vec<Dd> = pw[(z - 1) as usize].iter().map(|c| *c * lz).collect();

    let element = |u: &[Dd], v: &[Dd]| -> Dd { inner(u, v) - inner(u, psi) * inner(psi, v) };
    let four = TwoFloat::from(4.0);
    let ll = element(g_l, g_l);
    let zz = element(&g_z, &g_z);
    let lz_el = element(g_l, &g_z);
    QfiMatrix {
        f_ll: (ll.re * four).to_f64_lossy(),
        f_zz: (zz.re * four).to_f64_lossy(),
        f_lz: (lz_el.re * four).to_f64_lossy(),
        u_lz: (lz_el.im * four).to_f64_lossy(),
    }
}

/// Oracle QFI matrix at cutoff `dim`, checked under cutoff doubling.
pub fn qfi_matrix_oracle(probe: &ProbeSpec, model: &ModelSpec, dim: usize) -> Result<QfiMatrix> {
    let state = build_state(probe, dim)?;
    qfi_matrix_from_state(&state, model)
}

pub fn qfi_matrix_from_state(state: &TruncatedState, model: &ModelSpec) -> Result<QfiMatrix> {
    let here = qfi_at(state, model, state.dim);
    let wide = qfi_at(state, model, 2 * state.dim);
    check_stable(
        state.dim,
        &[
            (here.f_ll, wide.f_ll),
            (here.f_zz, wide.f_zz),
            (here.f_lz, wide.f_lz),
        ],
    )?;
    Ok(here)
}

/// Oracle QFI matrix with automatic cutoff selection.
pub fn qfi_matrix_oracle_auto(probe: &ProbeSpec, model: &ModelSpec) -> Result<QfiMatrix> {
    let mut dim = suggested_dim(probe, model).min(MAX_DIM);
    loop {
        let attempt = build_state(probe, dim).and_then(|s| qfi_matrix_from_state(&s, model));
        match attempt {
            Err(Error::CutoffTooSmall { .. }) if dim < MAX_DIM => dim *= 2,
            other => return other,
        }
    }
}

struct Spectral {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

fn quadrature_spectrum(dim: usize) -> Spectral {
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = s;
        x[(n, n - 1)] = s;
    }
    let eig = SymmetricEigen::new(x);
    Spectral {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    }
}

fn spectral_function(sp: &Spectral, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
    let v = sp.vectors.map(|x| Complex64::new(x, 0.0));
    let mut scaled = v.clone();
    for (j, &x) in sp.values.iter().enumerate() {
        let fx = f(x);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= fx;
        }
    }
    scaled * v.transpose()
}

/// `U = exp(-iλ X^ζ)` from the spectral decomposition of the truncated `X`.
pub fn evolution_operator(model: &ModelSpec, dim: usize) -> TruncatedOperator {
    let sp = quadrature_spectrum(dim);
    let (l, z) = (model.lambda_eff, model.zeta as i32);
    TruncatedOperator {
        dim,
        entries: spectral_function(&sp, |x| Complex64::from_polar(1.0, -l * x.powi(z))),
    }
}

/// SLD `L_λ = 2∂_λρ_λ = -2i[G_ζ, ρ_λ]` of the evolved pure state.
pub fn sld_operator(probe: &ProbeSpec, model: &ModelSpec, dim: usize) -> Result<TruncatedOperator> {
    Ok(sld_with_state(probe, model, dim)?.0)
}

fn sld_with_state(
    probe: &ProbeSpec,
    model: &ModelSpec,
    dim: usize,
) -> Result<(TruncatedOperator, DVector<Complex64>)> {
    let state = build_state(probe, dim)?;
    let u = evolution_operator(model, dim);
    let psi = &u.entries * &state.amplitudes;
    let x = TruncatedOperator::quadrature(dim).entries;
    let mut h = psi.clone();
    for _ in 0..model.zeta {
        h = &x * h;
    }
    let two_i = Complex64::new(0.0, 2.0);
    let entries = (&psi * h.adjoint() - &h * psi.adjoint()) * two_i;
    let op = TruncatedOperator { dim, entries };
    let residue = op.hermiticity_residue();
    if residue > HERMITICITY_TOLERANCE * op.entries.iter().map(|z| z.norm()).fold(1.0, f64::max) {
        return Err(Error::Consistency(format!(
            "SLD is not Hermitian: residue {residue:e}"
        )));
    }
    Ok((op, psi))
}

/// `Tr[ρ_λ L]` and `Tr[ρ_λ L²]` for the SLD at cutoff `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SldCheck {
    pub trace_rho_l: f64,
    pub trace_rho_l2: f64,
}

pub fn sld_check(probe: &ProbeSpec, model: &ModelSpec, dim: usize) -> Result<SldCheck> {
    let (l, psi) = sld_with_state(probe, model, dim)?;
    let lpsi = &l.entries * &psi;
    Ok(SldCheck {
        trace_rho_l: psi.dotc(&lpsi).re,
        trace_rho_l2: lpsi.norm_squared(),
    })
}

/// `F_ζζ` from the power-rule derivative `ζ x^{ζ-1}` next to the one from the
/// spectral derivative `x^ζ ln|x|` of the exponent. Reported, never asserted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaDiagnostic {
    pub power_rule: f64,
    pub spectral_log: f64,
}

pub fn zeta_derivative_diagnostic(
    probe: &ProbeSpec,
    model: &ModelSpec,
    dim: usize,
) -> Result<ZetaDiagnostic> {
    let state = build_state(probe, dim)?;
    let sp = quadrature_spectrum(dim);
    let (l, z) = (model.lambda_eff, model.zeta as i32);
    let variance = |f: &dyn Fn(f64) -> f64| {
        let op = spectral_function(&sp, |x| Complex64::new(f(x), 0.0));
        let g = &op * &state.amplitudes;
        let mean = state.amplitudes.dotc(&g);
        4.0 * (g.norm_squared() - mean.norm_sqr())
    };
    Ok(ZetaDiagnostic {
        power_rule: variance(&|x| l * z as f64 * x.powi(z - 1)),
        spectral_log: variance(&|x| {
            if x == 0.0 {
                0.0
            } else {
                l * x.powi(z) * x.abs().ln()
            }
        }),
    })
}
