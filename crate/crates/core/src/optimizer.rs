//! Maximization over the squeezing fraction at fixed energy, and location of
//! the energy `N_th` below which squeezed vacuum is optimal.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::Precision;
use crate::probe::{ProbeConvention, ProbeSpec};
use crate::qfi::{joint_bound_inverse, qfi_element_with, Element, ModelSpec};

const GRID_INTERVALS: usize = 64;
const GOLDEN_TOLERANCE: f64 = 1e-10;
const MAX_RESTARTS: usize = 3;
/// `γ_opt` at or above `1 - BOUNDARY_TOLERANCE` counts as squeezed vacuum.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    FLambda,
    FZeta,
    JointBound,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::FLambda => "f_lambda",
            TargetKind::FZeta => "f_zeta",
            TargetKind::JointBound => "joint_bound",
        }
    }
}

/// Figure of merit maximized over `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptTarget {
    pub kind: TargetKind,
    pub model: ModelSpec,
    pub precision: Precision,
    pub convention: ProbeConvention,
}

impl OptTarget {
    pub fn new(kind: TargetKind, model: ModelSpec) -> Result<Self> {
        if kind != TargetKind::FLambda {
            if model.lambda_eff <= 0.0 {
                return domain(format!("{} needs lambda > 0", kind.name()));
            }
            if model.zeta < 2 {
                return domain(format!("{} vanishes identically for zeta = 1", kind.name()));
            }
        }
        Ok(Self {
            kind,
            model,
            precision: Precision::Double,
            convention: ProbeConvention::Reference,
        })
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_convention(mut self, convention: ProbeConvention) -> Self {
        self.convention = convention;
        self
    }

    fn evaluate(&self, probe: &ProbeSpec, precision: Precision) -> Result<f64> {
        match self.kind {
            TargetKind::FLambda => qfi_element_with(probe, &self.model, Element::Lambda, precision),
            TargetKind::FZeta => qfi_element_with(probe, &self.model, Element::Zeta, precision),
            TargetKind::JointBound => joint_bound_inverse(probe, &self.model, precision),
        }
    }

    /// Objective at one point. A double-precision cancellation alarm is
    /// retried in extended precision.
    pub fn objective(&self, n_total: f64, gamma: f64, theta: f64, phi: f64) -> Result<f64> {
        let probe = ProbeSpec::new(n_total, gamma, theta, phi)?.with_convention(self.convention);
        let value = match self.evaluate(&probe, self.precision) {
            Err(Error::PrecisionLoss { .. }) if self.precision == Precision::Double => {
                self.evaluate(&probe, Precision::Extended)?
            }
            other => other?,
        };
        if !value.is_finite() {
            return Err(Error::NumericalRange {
                quantity: "objective",
                location: format!("N = {n_total}, gamma = {gamma}"),
            });
        }
        Ok(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptResult {
    pub gamma_opt: f64,
    pub objective_value: f64,
    pub at_boundary: bool,
    pub n_total: f64,
}

/// Maximum of `f` on `[lo, hi]` by golden-section search, endpoints included.
fn golden_max(f: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x)?;
        if fx >= best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// `γ_opt` at energy `n_total` and fixed phases.
pub fn optimize_gamma(
    n_total: f64,
    target: &OptTarget,
    theta: f64,
    phi: f64,
) -> Result<GammaOptResult> {
    if !(n_total.is_finite() && n_total > 0.0) {
        return domain(format!("N = {n_total} must be finite and > 0"));
    }
    let f = |g: f64| target.objective(n_total, g.clamp(0.0, 1.0), theta, phi);
    let grid: Vec<f64> = (0..=GRID_INTERVALS)
        .map(|i| i as f64 / GRID_INTERVALS as f64)
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&g| f(g)).collect::<Result<_>>()?;

    let last = GRID_INTERVALS;
    let mut peaks: Vec<usize> = (0..=last)
        .filter(|&i| {
            (i == 0 || values[i] >= values[i - 1]) && (i == last || values[i] > values[i + 1])
        })
        .collect();
    if peaks.is_empty() {
        // flat objective
        peaks.push(last);
    }
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    peaks.truncate(MAX_RESTARTS);

    let mut best: Option<(f64, f64)> = None;
    for &i in &peaks {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(last)];
        let cand = golden_max(&f, lo, hi)?;
        if best.is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    }
    let (gamma_opt, _) = best.expect("at least one peak");
    Ok(GammaOptResult {
        gamma_opt,
        objective_value: f(gamma_opt)?,
        at_boundary: gamma_opt >= 1.0 - BOUNDARY_TOLERANCE,
        n_total,
    })
}

/// Result of a threshold search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Threshold {
    /// `γ_opt = 1` below `n_th` and interior above; `tolerance` is the final
    /// bracket half-width.
    Found { n_th: f64, tolerance: f64 },
    /// `γ_opt = 1` over the whole searched range.
    None { searched_up_to: f64 },
    /// `γ_opt < 1` over the whole searched range.
    BelowRange { searched_from: f64 },
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Threshold::Found { n_th, .. } => Some(*n_th),
            _ => None,
        }
    }
}

/// Log-spaced sampling range and bisection tolerance for [`find_threshold_in`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub n_min: f64,
    pub n_max: f64,
    pub per_decade: usize,
    pub rel_tol: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            n_min: 1e-6,
            n_max: 1e4,
            per_decade: 8,
            rel_tol: 1e-4,
        }
    }
}

pub fn find_threshold(target: &OptTarget, theta: f64, phi: f64) -> Result<Threshold> {
    find_threshold_in(target, theta, phi, &ThresholdSearch::default())
}

pub fn find_threshold_in(
    target: &OptTarget,
    theta: f64,
    phi: f64,
    search: &ThresholdSearch,
) -> Result<Threshold> {
    if !(search.n_min > 0.0
        && search.n_max > search.n_min
        && search.per_decade > 0
        && search.rel_tol > 0.0)
    {
        return domain("threshold search needs 0 < n_min < n_max, per_decade > 0, rel_tol > 0");
    }
    let boundary = |n: f64| optimize_gamma(n, target, theta, phi).map(|r| r.at_boundary);
    let (l0, l1) = (search.n_min.log10(), search.n_max.log10());
    let count = ((l1 - l0) * search.per_decade as f64).ceil() as usize + 1;
    let ns: Vec<f64> = (0..count)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (count - 1) as f64))
        .collect();
    let flags: Vec<bool> = ns.par_iter().map(|&n| boundary(n)).collect::<Result<_>>()?;

    let changes: Vec<usize> = (0..count - 1)
        .filter(|&i| flags[i] != flags[i + 1])
        .collect();
    match changes.as_slice() {
        [] if flags[0] => Ok(Threshold::None {
            searched_up_to: search.n_max,
        }),
        [] => Ok(Threshold::BelowRange {
            searched_from: search.n_min,
        }),
        [i] if flags[*i] => {
            let (mut lo, mut hi) = (ns[*i], ns[*i + 1]);
            while (hi - lo) / lo > search.rel_tol {
                let mid = (lo * hi).sqrt();
                if boundary(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(Threshold::Found {
                n_th: 0.5 * (lo + hi),
                tolerance: 0.5 * (hi - lo),
            })
        }
        _ => Err(Error::ThresholdAmbiguous {
            crossings: changes
                .iter()
                .map(|&i| (ns[i] * ns[i + 1]).sqrt())
                .collect(),
        }),
    }
}

/// Whether `θ = φ = 0` maximizes the chosen diagonal QFI element over a
/// `grid × grid` lattice of phases in `[0, 2π)`.
///
/// The comparison allows a relative slack of `1e-9` because the lattice
/// contains phase pairs that are exact symmetry images of the origin.
pub fn verify_zero_phase_optimality(
    n_total: f64,
    gamma: f64,
    model: &ModelSpec,
    grid: usize,
    element: Element,
    convention: ProbeConvention,
) -> Result<bool> {
    if grid < 8 {
        return domain("phase grid needs at least 8 points per axis");
    }
    let kind = match element {
        Element::Lambda => TargetKind::FLambda,
        Element::Zeta => TargetKind::FZeta,
    };
    let target = OptTarget {
        kind,
        model: *model,
        precision: Precision::Double,
        convention,
    };
    let origin = target.objective(n_total, gamma, 0.0, 0.0)?;
    let slack = 1e-9 * origin.abs().max(1.0);
    let points: Vec<(f64, f64)> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .map(|(i, j)| {
            (
                2.0 * PI * i as f64 / grid as f64,
                2.0 * PI * j as f64 / grid as f64,
            )
        })
        .collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(t, p)| target.objective(n_total, gamma, t, p))
        .collect::<Result<_>>()?;
    Ok(values.iter().all(|&v| v <= origin + slack))
}
