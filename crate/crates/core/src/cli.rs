use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nlprobe::fock_oracle::qfi_matrix_oracle_auto;
use nlprobe::optimizer::{find_threshold_in, OptTarget, TargetKind, Threshold, ThresholdSearch};
use nlprobe::scan::{
    format_float, gamma_scan, log_space, opt_gamma_scan, phase_scan, ScanConfig, ScanResult,
};
use nlprobe::{
    reparametrize_physical, scalar_bound_inverse, Element, Error, ModelSpec, Precision,
    ProbeConvention, ProbeSpec,
};

/// `(3√2 - 4)/8`.
const REFERENCE_THRESHOLD: f64 = 0.030_330_085_889_910_64;

#[derive(Parser, Debug)]
#[command(
    name = "nlprobe",
    version,
    about = "QFI bounds for (a + a†)^ζ media probed with displaced squeezed light"
)]
pub struct Cli {
    /// Worker threads for grid evaluations
    #[arg(long, global = true, env = "NLPROBE_JOBS")]
    jobs: Option<usize>,

    /// Evaluate moments in double-double arithmetic
    #[arg(long, global = true)]
    extended: bool,

    /// Displacement convention of the closed-form moments
    #[arg(long, global = true, value_enum, default_value_t = ConventionArg::Reference)]
    convention: ConventionArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Reference,
    EnergyExact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ElementArg {
    #[value(name = "f_lambda")]
    FLambda,
    #[value(name = "f_zeta")]
    FZeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    #[value(name = "f_lambda")]
    FLambda,
    #[value(name = "f_zeta")]
    FZeta,
    #[value(name = "joint", alias = "joint_bound")]
    Joint,
}

impl From<ElementArg> for Element {
    fn from(e: ElementArg) -> Self {
        match e {
            ElementArg::FLambda => Element::Lambda,
            ElementArg::FZeta => Element::Zeta,
        }
    }
}

impl From<TargetArg> for TargetKind {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::FLambda => TargetKind::FLambda,
            TargetArg::FZeta => TargetKind::FZeta,
            TargetArg::Joint => TargetKind::JointBound,
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Emit one JSON document instead of CSV / text
    #[arg(long)]
    json: bool,
    /// Write to a file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// QFI matrix, Uhlmann element and scalar bound at one point
    #[command(allow_negative_numbers = true)]
    Qfi {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        zeta: u32,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Also evaluate the Fock-space oracle and report deltas
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        json: bool,
    },
    /// Diagonal QFI element over a (theta, phi) grid
    #[command(allow_negative_numbers = true)]
    ScanPhase {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        zeta: u32,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum)]
        target: ElementArg,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// All figures of merit along gamma at fixed energies
    #[command(allow_negative_numbers = true)]
    ScanGamma {
        /// Energies, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long)]
        zeta: u32,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 101)]
        gamma_points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Optimal squeezing fraction over a log-spaced energy range
    #[command(allow_negative_numbers = true)]
    OptGamma {
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long, value_delimiter = ',', required = true)]
        zeta: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        lambda: Vec<f64>,
        /// min:max:count, log spaced
        #[arg(long, default_value = "1e-3:1e4:57")]
        n_range: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Energy below which squeezed vacuum is optimal
    #[command(allow_negative_numbers = true)]
    Threshold {
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long)]
        zeta: u32,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-6)]
        n_min: f64,
        #[arg(long, default_value_t = 1e4)]
        n_max: f64,
        #[arg(long)]
        json: bool,
    },
    /// Closed form against the Fock-space oracle on a small grid
    Selftest,
}

/// Failure carrying the process exit code and a machine-readable tag.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind, "message": self.message, "exit_code": self.code }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_usage() { 2 } else { 3 },
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure {
                code: 2,
                kind: "io".into(),
                message: format!("{e:#}"),
            },
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage".into(),
        message: message.into(),
    }
}

struct Settings {
    cfg: ScanConfig,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = ScanConfig {
        precision: if cli.extended {
            Precision::Extended
        } else {
            Precision::Double
        },
        convention: match cli.convention {
            ConventionArg::Reference => ProbeConvention::Reference,
            ConventionArg::EnergyExact => ProbeConvention::EnergyExact,
        },
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be >= 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| usage(e.to_string()))?;
    let ctx = Settings { cfg };
    pool.install(|| dispatch(&ctx, cli.command))
}

fn dispatch(ctx: &Settings, command: Command) -> Result<(), Failure> {
    match command {
        Command::Qfi {
            n,
            gamma,
            theta,
            phi,
            zeta,
            lambda,
            time,
            oracle,
            json,
        } => cmd_qfi(
            ctx,
            n,
            gamma,
            theta,
            phi,
            ModelSpec::with_time(lambda, zeta, time)?,
            oracle,
            json,
        ),
        Command::ScanPhase {
            n,
            gamma,
            zeta,
            lambda,
            target,
            grid,
            out,
        } => {
            let scan = phase_scan(
                n,
                gamma,
                &ModelSpec::new(lambda, zeta)?,
                target.into(),
                grid,
                &ctx.cfg,
            )?;
            emit_scan(&scan, &out)
        }
        Command::ScanGamma {
            n,
            zeta,
            lambda,
            gamma_points,
            theta,
            phi,
            out,
        } => {
            if gamma_points < 2 {
                return Err(usage("--gamma-points must be >= 2"));
            }
            let gammas: Vec<f64> = (0..gamma_points)
                .map(|i| i as f64 / (gamma_points - 1) as f64)
                .collect();
            let scan = gamma_scan(
                &n,
                &gammas,
                &ModelSpec::new(lambda, zeta)?,
                theta,
                phi,
                &ctx.cfg,
            )?;
            emit_scan(&scan, &out)
        }
        Command::OptGamma {
            target,
            zeta,
            lambda,
            n_range,
            theta,
            phi,
            out,
        } => {
            let ns = parse_range(&n_range)?;
            let lambdas = if target == TargetArg::FLambda {
                vec![lambda[0]]
            } else {
                lambda
            };
            let mut scan =
                opt_gamma_scan(target.into(), &zeta, &lambdas, &ns, theta, phi, &ctx.cfg)?;
            scan.metadata.insert("n_range".into(), n_range);
            emit_scan(&scan, &out)
        }
        Command::Threshold {
            target,
            zeta,
            lambda,
            n_min,
            n_max,
            json,
        } => cmd_threshold(
            ctx,
            target.into(),
            ModelSpec::new(lambda, zeta)?,
            n_min,
            n_max,
            json,
        ),
        Command::Selftest => cmd_selftest(),
    }
}

fn parse_range(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || usage(format!("--n-range expects min:max:count, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(log_space(lo, hi, count)?)
}

fn write_out(text: &str, output: &Option<PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to stdout")
                .map_err(Failure::from)
        }
    }
}

fn emit_scan(scan: &ScanResult, out: &OutputArgs) -> Result<(), Failure> {
    let text = if out.json {
        format!("{}\n", scan.to_json())
    } else {
        scan.to_csv()
    };
    write_out(&text, &out.output)
}

#[allow(clippy::too_many_arguments)]
fn cmd_qfi(
    ctx: &Settings,
    n: f64,
    gamma: f64,
    theta: f64,
    phi: f64,
    model: ModelSpec,
    oracle: bool,
    as_json: bool,
) -> Result<(), Failure> {
    let probe = ProbeSpec::new(n, gamma, theta, phi)?.with_convention(ctx.cfg.convention);
    let q = ctx.cfg.qfi(&probe, &model)?;
    let physical = reparametrize_physical(&q, &model);
    let cs = scalar_bound_inverse(&q)?;
    let oracle_q = if oracle {
        Some(qfi_matrix_oracle_auto(&probe, &model)?)
    } else {
        None
    };
    let delta = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);

    if as_json {
        let mut doc = json!({
            "probe": probe,
            "model": model,
            "precision": ctx.cfg.precision.name(),
            "qfi": q,
            "qfi_physical": physical,
            "c_s_inv": cs,
        });
        if let Some(o) = oracle_q {
            doc["oracle"] = json!(o);
            doc["oracle_delta"] = json!({
                "f_ll": delta(q.f_ll, o.f_ll),
                "f_zz": delta(q.f_zz, o.f_zz),
                "f_lz": delta(q.f_lz, o.f_lz),
            });
        }
        return write_out(&format!("{doc}\n"), &None);
    }
    let mut s = String::new();
    let mut line = |k: &str, v: f64| s.push_str(&format!("{k}={}\n", format_float(v)));
    line("f_ll", q.f_ll);
    line("f_zz", q.f_zz);
    line("f_lz", q.f_lz);
    line("u_lz", q.u_lz);
    line("c_s_inv", cs);
    if model.time != 1.0 {
        line("f_ll_physical", physical.f_ll);
        line("f_lz_physical", physical.f_lz);
    }
    if let Some(o) = oracle_q {
        line("oracle_f_ll", o.f_ll);
        line("oracle_f_zz", o.f_zz);
        line("oracle_f_lz", o.f_lz);
        line("oracle_u_lz", o.u_lz);
        line("delta_f_ll", delta(q.f_ll, o.f_ll));
        line("delta_f_zz", delta(q.f_zz, o.f_zz));
        line("delta_f_lz", delta(q.f_lz, o.f_lz));
    }
    if model.zeta == 1 {
        s.push_str("note=f_zz uses G_0 = identity at zeta = 1\n");
    }
    write_out(&s, &None)
}

fn cmd_threshold(
    ctx: &Settings,
    kind: TargetKind,
    model: ModelSpec,
    n_min: f64,
    n_max: f64,
    as_json: bool,
) -> Result<(), Failure> {
    let target = OptTarget::new(kind, model)?
        .with_precision(ctx.cfg.precision)
        .with_convention(ctx.cfg.convention);
    let search = ThresholdSearch {
        n_min,
        n_max,
        ..Default::default()
    };
    let t = find_threshold_in(&target, 0.0, 0.0, &search)?;
    let exact_reference = match kind {
        TargetKind::FLambda => model.zeta.is_multiple_of(2),
        TargetKind::FZeta => model.zeta % 2 == 1,
        TargetKind::JointBound => false,
    };
    let reference = match kind {
        TargetKind::JointBound => None,
        _ if exact_reference => Some("exact"),
        _ if model.zeta >= 5 => Some("asymptotic"),
        _ => None,
    };
    if as_json {
        let mut doc = json!({ "target": kind.name(), "zeta": model.zeta, "lambda": model.lambda_eff, "threshold": t });
        if let (Some(kind), Some(v)) = (reference, t.value()) {
            doc["reference"] = json!({ "value": REFERENCE_THRESHOLD, "kind": kind, "deviation": v - REFERENCE_THRESHOLD });
        }
        return write_out(&format!("{doc}\n"), &None);
    }
    let mut s = String::new();
    match t {
        Threshold::Found { n_th, tolerance } => {
            s.push_str(&format!(
                "n_th={}\ntolerance={}\n",
                format_float(n_th),
                format_float(tolerance)
            ));
            if let Some(kind) = reference {
                s.push_str(&format!(
                    "reference={} ({kind})\ndeviation={}\n",
                    format_float(REFERENCE_THRESHOLD),
                    format_float(n_th - REFERENCE_THRESHOLD)
                ));
            }
        }
        Threshold::None { searched_up_to } => {
            s.push_str(&format!(
                "n_th=none\nsearched_up_to={}\n",
                format_float(searched_up_to)
            ));
        }
        Threshold::BelowRange { searched_from } => {
            s.push_str(&format!(
                "n_th=below_range\nsearched_from={}\n",
                format_float(searched_from)
            ));
        }
    }
    write_out(&s, &None)
}

fn cmd_selftest() -> Result<(), Failure> {
    let mut failures = 0;
    let mut s = String::new();
    for conv in [ProbeConvention::Reference, ProbeConvention::EnergyExact] {
        for (n, g, th, ph) in [
            (0.0, 0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0, 0.0),
            (1.0, 1.0, 0.0, 0.0),
            (3.0, 0.5, 1.0, 0.5),
        ] {
            for zeta in 1..=4 {
                let probe = ProbeSpec::new(n, g, th, ph)?.with_convention(conv);
                let model = ModelSpec::new(1.0, zeta)?;
                let q = nlprobe::qfi_matrix_with(&probe, &model, Precision::Extended)?;
                let o = qfi_matrix_oracle_auto(&probe, &model)?;
                let err = [(q.f_ll, o.f_ll), (q.f_zz, o.f_zz), (q.f_lz, o.f_lz)]
                    .iter()
                    .map(|&(a, b)| {
                        if a.abs() >= 1.0 {
                            (a - b).abs() / a.abs()
                        } else {
                            (a - b).abs() / 1e-2
                        }
                    })
                    .fold(o.u_lz.abs() / 1e-4, f64::max);
                let ok = err <= 1e-6;
                failures += usize::from(!ok);
                s.push_str(&format!(
                    "{} convention={} n={n} gamma={g} theta={th} phi={ph} zeta={zeta} worst={err:.2e}\n",
                    if ok { "PASS" } else { "FAIL" },
                    conv.name()
                ));
            }
        }
    }
    write_out(&s, &None)?;
    if failures > 0 {
        return Err(Failure {
            code: 3,
            kind: "selftest".into(),
            message: format!("{failures} oracle comparisons failed"),
        });
    }
    Ok(())
}
