//! Tabulated parameter sweeps and their CSV / JSON serialization.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::asymptotics::{gamma_argmax_high_n, gamma_opt_high_n, in_published_scope};
use crate::error::{domain, Error, Result};
use crate::numeric::Precision;
use crate::optimizer::{optimize_gamma, OptTarget, TargetKind};
use crate::probe::{ProbeConvention, ProbeSpec};
use crate::qfi::{qfi_matrix_with, scalar_bound_inverse, Element, ModelSpec, QfiMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// One value column, flat in row-major axis order (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    pub fields: Vec<Field>,
    pub metadata: BTreeMap<String, String>,
}

impl ScanResult {
    pub fn new(axes: Vec<Axis>, metadata: BTreeMap<String, String>) -> Self {
        Self {
            axes,
            fields: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_field(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Consistency(format!(
                "field {name} has {} values for {} grid points",
                values.len(),
                self.len()
            )));
        }
        self.fields.push(Field {
            name: name.to_string(),
            values,
        });
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.values.as_slice())
    }

    /// Axis coordinates of row `i`.
    pub fn coordinates(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.values.len();
            out[k] = axis.values[i % n];
            i /= n;
        }
        out
    }

    /// `#`-prefixed metadata, a header row, then one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let header: Vec<&str> = self
            .axes
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.fields.iter().map(|f| f.name.as_str()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let row: Vec<String> = self
                .coordinates(i)
                .into_iter()
                .chain(self.fields.iter().map(|f| f.values[i]))
                .map(format_float)
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let axes: serde_json::Map<String, serde_json::Value> = self
            .axes
            .iter()
            .map(|a| (a.name.clone(), json!(a.values)))
            .collect();
        let values: serde_json::Map<String, serde_json::Value> = self
            .fields
            .iter()
            .map(|f| (f.name.clone(), json!(f.values)))
            .collect();
        json!({ "axes": axes, "values": values, "metadata": self.metadata })
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Settings shared by every scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub precision: Precision,
    pub convention: ProbeConvention,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            precision: Precision::Double,
            convention: ProbeConvention::Reference,
        }
    }
}

impl ScanConfig {
    fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert(
            "tool".into(),
            format!("nlprobe {}", env!("CARGO_PKG_VERSION")),
        );
        m.insert("precision".into(), self.precision.name().into());
        m.insert("convention".into(), self.convention.name().into());
        m
    }

    fn probe(&self, n: f64, gamma: f64, theta: f64, phi: f64) -> Result<ProbeSpec> {
        Ok(ProbeSpec::new(n, gamma, theta, phi)?.with_convention(self.convention))
    }

    /// QFI matrix, retrying a double-precision alarm in extended precision.
    pub fn qfi(&self, probe: &ProbeSpec, model: &ModelSpec) -> Result<QfiMatrix> {
        match qfi_matrix_with(probe, model, self.precision) {
            Err(Error::PrecisionLoss { .. }) if self.precision == Precision::Double => {
                qfi_matrix_with(probe, model, Precision::Extended)
            }
            other => other,
        }
    }
}

fn model_metadata(m: &mut BTreeMap<String, String>, model: &ModelSpec) {
    m.insert("zeta".into(), model.zeta.to_string());
    m.insert("lambda".into(), format_float(model.lambda_eff));
    m.insert("time".into(), format_float(model.time));
}

/// Phase grid `2πi / grid`, `i = 0..grid`.
pub fn phase_grid(grid: usize) -> Vec<f64> {
    (0..grid)
        .map(|i| 2.0 * PI * i as f64 / grid as f64)
        .collect()
}

/// Diagonal QFI element on a `(θ, φ)` grid. `F_ζζ` is divided by `λ²`.
pub fn phase_scan(
    n_total: f64,
    gamma: f64,
    model: &ModelSpec,
    element: Element,
    grid: usize,
    cfg: &ScanConfig,
) -> Result<ScanResult> {
    if grid == 0 {
        return domain("phase grid needs at least one point");
    }
    if element == Element::Zeta && model.lambda_eff == 0.0 {
        return domain("F_zeta / lambda^2 needs lambda > 0");
    }
    let axis = phase_grid(grid);
    let points: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&t| axis.iter().map(move |&p| (t, p)))
        .collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(t, p)| {
            let q = cfg.qfi(&cfg.probe(n_total, gamma, t, p)?, model)?;
            Ok(match element {
                Element::Lambda => q.f_ll,
                Element::Zeta => q.f_zz / (model.lambda_eff * model.lambda_eff),
            })
        })
        .collect::<Result<_>>()?;

    let mut meta = cfg.metadata();
    model_metadata(&mut meta, model);
    meta.insert("command".into(), "scan-phase".into());
    meta.insert("n".into(), format_float(n_total));
    meta.insert("gamma".into(), format_float(gamma));
    meta.insert("grid".into(), grid.to_string());
    meta.insert("target".into(), element.name().into());
    meta.insert(
        "value".into(),
        match element {
            Element::Lambda => "F_lambda_lambda",
            Element::Zeta => "F_zeta_zeta / lambda^2",
        }
        .into(),
    );
    let mut out = ScanResult::new(
        vec![
            Axis {
                name: "theta".into(),
                values: axis.clone(),
            },
            Axis {
                name: "phi".into(),
                values: axis,
            },
        ],
        meta,
    );
    out.push_field(element.name(), values)?;
    Ok(out)
}

/// All figures of merit along `γ` for each energy.
pub fn gamma_scan(
    ns: &[f64],
    gammas: &[f64],
    model: &ModelSpec,
    theta: f64,
    phi: f64,
    cfg: &ScanConfig,
) -> Result<ScanResult> {
    let points: Vec<(f64, f64)> = ns
        .iter()
        .flat_map(|&n| gammas.iter().map(move |&g| (n, g)))
        .collect();
    let rows: Vec<(QfiMatrix, f64)> = points
        .par_iter()
        .map(|&(n, g)| {
            let q = cfg.qfi(&cfg.probe(n, g, theta, phi)?, model)?;
            let cs = scalar_bound_inverse(&q)?;
            Ok((q, cs))
        })
        .collect::<Result<_>>()?;

    let mut meta = cfg.metadata();
    model_metadata(&mut meta, model);
    meta.insert("command".into(), "scan-gamma".into());
    meta.insert("theta".into(), format_float(theta));
    meta.insert("phi".into(), format_float(phi));
    let mut out = ScanResult::new(
        vec![
            Axis {
                name: "n_total".into(),
                values: ns.to_vec(),
            },
            Axis {
                name: "gamma".into(),
                values: gammas.to_vec(),
            },
        ],
        meta,
    );
    out.push_field("f_lambda", rows.iter().map(|r| r.0.f_ll).collect())?;
    out.push_field("f_zeta", rows.iter().map(|r| r.0.f_zz).collect())?;
    out.push_field("f_cross", rows.iter().map(|r| r.0.f_lz).collect())?;
    out.push_field("joint_bound", rows.iter().map(|r| r.1).collect())?;
    Ok(out)
}

/// Published large-N optimum and the leading-term maximizer for a target.
/// `NaN` where no closed form applies.
pub fn asymptotes(kind: TargetKind, zeta: u32) -> (f64, f64) {
    let order = match kind {
        TargetKind::FLambda => zeta,
        TargetKind::FZeta if zeta >= 2 => zeta - 1,
        _ => return (f64::NAN, f64::NAN),
    };
    let published = if in_published_scope(order) {
        gamma_opt_high_n(order).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    (published, gamma_argmax_high_n(order).unwrap_or(f64::NAN))
}

/// `γ_opt(N)` for every `(ζ, λ)` pair.
pub fn opt_gamma_scan(
    kind: TargetKind,
    zetas: &[u32],
    lambdas: &[f64],
    ns: &[f64],
    theta: f64,
    phi: f64,
    cfg: &ScanConfig,
) -> Result<ScanResult> {
    let mut points = Vec::new();
    for &z in zetas {
        for &l in lambdas {
            let target = OptTarget::new(kind, ModelSpec::new(l, z)?)?
                .with_precision(cfg.precision)
                .with_convention(cfg.convention);
            for &n in ns {
                points.push((target, n));
            }
        }
    }
    let results: Vec<_> = points
        .par_iter()
        .map(|(t, n)| optimize_gamma(*n, t, theta, phi))
        .collect::<Result<_>>()?;

    let mut meta = cfg.metadata();
    meta.insert("command".into(), "opt-gamma".into());
    meta.insert("target".into(), kind.name().into());
    meta.insert("theta".into(), format_float(theta));
    meta.insert("phi".into(), format_float(phi));
    let mut out = ScanResult::new(
        vec![
            Axis {
                name: "zeta".into(),
                values: zetas.iter().map(|&z| z as f64).collect(),
            },
            Axis {
                name: "lambda".into(),
                values: lambdas.to_vec(),
            },
            Axis {
                name: "n_total".into(),
                values: ns.to_vec(),
            },
        ],
        meta,
    );
    let asym: Vec<(f64, f64)> = points
        .iter()
        .map(|(t, _)| asymptotes(kind, t.model.zeta))
        .collect();
    out.push_field("gamma_opt", results.iter().map(|r| r.gamma_opt).collect())?;
    out.push_field(
        "objective",
        results.iter().map(|r| r.objective_value).collect(),
    )?;
    out.push_field(
        "at_boundary",
        results
            .iter()
            .map(|r| f64::from(u8::from(r.at_boundary)))
            .collect(),
    )?;
    out.push_field("asymptote", asym.iter().map(|a| a.0).collect())?;
    out.push_field("leading_argmax", asym.iter().map(|a| a.1).collect())?;
    Ok(out)
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && count >= 1) || (count == 1 && hi != lo) {
        return domain(format!("invalid log range {lo}:{hi}:{count}"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfi::qfi_matrix;

    #[test]
    fn csv_layout() {
        let mut s = ScanResult::new(
            vec![
                Axis {
                    name: "a".into(),
                    values: vec![1.0, 2.0],
                },
                Axis {
                    name: "b".into(),
                    values: vec![0.1, 0.2, 0.3],
                },
            ],
            BTreeMap::from([("k".to_string(), "v".to_string())]),
        );
        s.push_field("x", (0..6).map(f64::from).collect()).unwrap();
        assert!(s.push_field("y", vec![1.0]).is_err());
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# k=v");
        assert_eq!(lines[1], "a,b,x");
        assert_eq!(lines[2], "1.0,0.1,0.0");
        assert_eq!(lines[4], "1.0,0.3,2.0");
        assert_eq!(lines[5], "2.0,0.1,3.0");
        assert_eq!(lines.len(), 8);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.1,
            1.0 / 3.0,
            1e-300,
            6.02e23,
            -2.5,
            0.030_330_085_889_910_64,
        ] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn phase_scan_examples() {
        let m = ModelSpec::new(1.0, 3).unwrap();
        let s = phase_scan(3.0, 0.5, &m, Element::Lambda, 32, &ScanConfig::default()).unwrap();
        assert_eq!(s.len(), 1024);
        let v = s.field("f_lambda").unwrap();
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
        assert_eq!(imax, 0);

        let s = phase_scan(2.0, 0.4, &m, Element::Lambda, 1, &ScanConfig::default()).unwrap();
        let q = qfi_matrix(&ProbeSpec::new(2.0, 0.4, 0.0, 0.0).unwrap(), &m).unwrap();
        assert_eq!(s.field("f_lambda").unwrap(), &[q.f_ll]);

        let m2 = ModelSpec::new(3.0, 2).unwrap();
        let s = phase_scan(3.0, 0.01, &m2, Element::Zeta, 8, &ScanConfig::default()).unwrap();
        for &v in s.field("f_zeta").unwrap() {
            assert!((v / 16.0 - 1.0).abs() < 0.5, "{v}");
        }
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-3, 1e4, 8).unwrap();
        assert_eq!((v[0], v[7], v.len()), (1e-3, 1e4, 8));
        assert!((v[1] - 1e-2).abs() < 1e-15);
        assert!(log_space(0.0, 1.0, 3).is_err());
        assert_eq!(log_space(2.0, 2.0, 1).unwrap(), vec![2.0]);
    }

    #[test]
    fn opt_gamma_columns() {
        let s = opt_gamma_scan(
            TargetKind::FZeta,
            &[2],
            &[1.0],
            &[0.01, 1.0, 100.0],
            0.0,
            0.0,
            &ScanConfig::default(),
        )
        .unwrap();
        assert!(s.field("gamma_opt").unwrap().iter().all(|&g| g == 1.0));
        assert!(s.field("asymptote").unwrap()[0].is_nan());
        let (p, l) = asymptotes(TargetKind::FZeta, 4);
        assert_eq!(
            (p, l),
            (
                gamma_opt_high_n(3).unwrap(),
                gamma_argmax_high_n(3).unwrap()
            )
        );
    }
}
