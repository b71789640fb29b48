//! Closed-form quadrature moments `⟨G_k⟩ = ⟨(a + a†)^k⟩` on a Gaussian probe.
//!
//! With `w = e^{iψ} β` the general-phase moment is
//! `η^k Σ_m Σ_s C(k, m, s) (w*)^s w^(k-2m-s)`.

use num_complex::Complex;
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::combinatorics::{coeff_rows, FromCoeff};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, Precision, Real};
use crate::probe::{BogoliubovView, ProbeSpec};

/// Largest allowed imaginary residue, relative to the sum of term magnitudes.
const IMAG_TOLERANCE: f64 = 1e-10;

/// `⟨G_k⟩` for `k = 0..=k_max` on one probe.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub probe: ProbeSpec,
    pub k_max: u32,
    /// Complex carrier; imaginary parts are the (already validated) residues.
    pub values: Vec<Complex64>,
}

impl MomentVector {
    pub fn new(probe: &ProbeSpec, k_max: u32, precision: Precision) -> Result<Self> {
        let view = probe.bogoliubov();
        let values = match precision {
            Precision::Double => moments_complex::<f64>(&view, k_max)?
                .into_iter()
                .map(|z| Complex64::new(z.re, z.im))
                .collect(),
            Precision::Extended => moments_complex::<TwoFloat>(&view, k_max)?
                .into_iter()
                .map(|z| Complex64::new(z.re.to_f64_lossy(), z.im.to_f64_lossy()))
                .collect(),
        };
        Ok(Self {
            probe: *probe,
            k_max,
            values,
        })
    }

    pub fn get(&self, k: u32) -> Option<f64> {
        self.values.get(k as usize).map(|z| z.re)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// `⟨G_k⟩` on `probe` in double precision.
pub fn moment_general(probe: &ProbeSpec, k: u32) -> Result<f64> {
    moment_general_with(probe, k, Precision::Double)
}

pub fn moment_general_with(probe: &ProbeSpec, k: u32, precision: Precision) -> Result<f64> {
    let view = probe.bogoliubov();
    match precision {
        Precision::Double => moment_single::<f64>(&view, k).map(|z| z.re),
        Precision::Extended => moment_single::<TwoFloat>(&view, k).map(|z| z.re.to_f64_lossy()),
    }
}

/// Real-axis moment (`θ = φ = 0`, reference convention) from the coherent
/// amplitude `alpha` and squeezing radius `r`.
///
/// The state is Gaussian with mean `2α e^{2r}` and variance `e^{2r}`; the sum
/// below is the usual Gaussian moment expansion and contains no division by
/// `α`. The vacuum-displacement case goes through the double sum directly.
pub fn moment_real_axis(alpha: f64, r: f64, k: u32) -> f64 {
    if alpha == 0.0 {
        let view = BogoliubovView {
            mu: r.cosh(),
            nu: Complex64::new(r.sinh(), 0.0),
            beta: Complex64::new(0.0, 0.0),
            eta: r.exp(),
            psi: 0.0,
        };
        return moment_single::<f64>(&view, k)
            .expect("real-axis terms are real")
            .re;
    }
    let var = (2.0 * r).exp();
    let mean = 2.0 * alpha * var;
    let mut terms: Vec<f64> = (0..=k / 2)
        .map(|j| {
            // k! / (j! (k-2j)! 2^j), built as a running product to stay in range
            let mut c = 1.0;
            for i in 0..2 * j {
                c *= (k - i) as f64;
            }
            for i in 1..=j {
                c /= (2 * i) as f64;
            }
            c * mean.powi((k - 2 * j) as i32) * var.powi(j as i32)
        })
        .collect();
    compensated_sum(&mut terms)
}

fn promote<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

fn powers<T: Real>(w: Complex<T>, n: u32) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = Complex::new(T::one(), T::zero());
    for _ in 0..=n {
        out.push(acc);
        acc = acc * w;
    }
    out
}

pub(crate) struct Kernel<T> {
    eta: T,
    w_pow: Vec<Complex<T>>,
    wc_pow: Vec<Complex<T>>,
}

impl<T: FromCoeff> Kernel<T> {
    pub(crate) fn new(view: &BogoliubovView, k_max: u32) -> Self {
        let w = promote::<T>(Complex64::from_polar(1.0, view.psi) * view.beta);
        Self {
            eta: T::of(view.eta),
            w_pow: powers(w, k_max),
            wc_pow: powers(w.conj(), k_max),
        }
    }

    pub(crate) fn moment(&self, k: u32) -> Result<Complex<T>> {
        if k == 0 {
            return Ok(Complex::new(T::one(), T::zero()));
        }
        let rows = coeff_rows::<T>(k);
        let mut re = Vec::new();
        let mut im = Vec::new();
        let mut scale = T::zero();
        for (m, row) in rows.iter().enumerate() {
            let rest = k as usize - 2 * m;
            for (s, &c) in row.iter().enumerate() {
                let t = self.wc_pow[s] * self.w_pow[rest - s] * c;
                scale = scale + t.norm_sqr().sqrt();
                re.push(t.re);
                im.push(t.im);
            }
        }
        let sum_re = compensated_sum(&mut re);
        let sum_im = compensated_sum(&mut im);
        if sum_im.abs() > T::of(IMAG_TOLERANCE) * scale {
            return Err(Error::Consistency(format!(
                "moment of order {k} has imaginary residue {:e} against term scale {:e}",
                sum_im.to_f64_lossy(),
                scale.to_f64_lossy()
            )));
        }
        let eta_k = self.eta.powi(k as i32);
        Ok(Complex::new(sum_re * eta_k, sum_im * eta_k))
    }
}

fn moment_single<T: FromCoeff>(view: &BogoliubovView, k: u32) -> Result<Complex<T>> {
    Kernel::<T>::new(view, k).moment(k)
}

fn moments_complex<T: FromCoeff>(view: &BogoliubovView, k_max: u32) -> Result<Vec<Complex<T>>> {
    let kernel = Kernel::<T>::new(view, k_max);
    (0..=k_max).map(|k| kernel.moment(k)).collect()
}

/// Real moments of the listed orders in working precision `T`.
pub(crate) fn moments_in<T: FromCoeff>(probe: &ProbeSpec, orders: &[u32]) -> Result<Vec<T>> {
    let k_max = orders.iter().copied().max().unwrap_or(0);
    let kernel = Kernel::<T>::new(&probe.bogoliubov(), k_max);
    orders
        .iter()
        .map(|&k| kernel.moment(k).map(|z| z.re))
        .collect()
}
