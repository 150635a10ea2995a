//! Command-line front end: scenario sweeps that emit machine-readable
//! CSV tables, a fast self-check suite, and the built-in preset list.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use zfperf_core::channel::{derive_params, presets, ChannelConfig, FadingCase};
use zfperf_core::mc;
use zfperf_core::perf;
use zfperf_core::snr::{self, MgfMethod};
use zfperf_core::{CMat, Cx, Error};

#[derive(Parser)]
#[command(name = "zfperf", version, about = "Zero-forcing MIMO performance analysis under Rician/Rayleigh fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a variable over a grid and write one CSV row per point.
    Sweep(SweepArgs),
    /// Run the fast invariant suite against a scenario.
    Validate(ValidateArgs),
    /// List built-in scenario presets.
    Presets,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario config file (JSON with the ChannelConfig field names).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset (a1, c2, d1).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    k_factor_db: Option<f64>,
    #[arg(long)]
    azimuth_spread_deg: Option<f64>,
    #[arg(long)]
    theta_c_deg: Option<f64>,
    #[arg(long)]
    antenna_spacing: Option<f64>,
    /// Per-symbol input SNR in dB.
    #[arg(long)]
    snr_per_symbol_db: Option<f64>,
    /// Per-bit input SNR in dB (converted through the modulation order).
    #[arg(long, conflicts_with = "snr_per_symbol_db")]
    gamma_b_db: Option<f64>,
    #[arg(long)]
    modulation_order: Option<u32>,
    #[arg(long, value_enum)]
    fading_case: Option<FadingArg>,
    /// Fill interferer_mean with an all-equal-elements matrix (the
    /// normalization fixes its scale).
    #[arg(long)]
    interferer_mean_equal: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FadingArg {
    RicianRayleigh,
    RayleighRician,
    RayleighRayleigh,
}

impl From<FadingArg> for FadingCase {
    fn from(f: FadingArg) -> Self {
        match f {
            FadingArg::RicianRayleigh => FadingCase::RicianRayleigh,
            FadingArg::RayleighRician => FadingCase::RayleighRician,
            FadingArg::RayleighRayleigh => FadingCase::RayleighRayleigh,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Swept quantity.
    #[arg(long, value_enum)]
    variable: Variable,
    /// Comma-separated, strictly increasing grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    /// Requested output columns.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    outputs: Vec<Output>,
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Outage threshold in dB (linear SNR threshold = 10^(x/10)).
    #[arg(long, default_value_t = 8.2)]
    gamma_th_db: f64,
    /// Evaluation point (linear SNR) for the pdf output column.
    #[arg(long)]
    pdf_at: Option<f64>,
    /// Relative tolerance for the pdf/outage series.
    #[arg(long, default_value_t = 1e-10)]
    tol_series: f64,
    /// Relative tolerance for the ergodic-capacity series.
    #[arg(long, default_value_t = 1e-5)]
    tol_capacity: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variable {
    /// Per-bit input SNR, dB.
    GammaB,
    /// Rician K-factor, dB.
    KDb,
    /// Azimuth spread, degrees.
    As,
}

impl Variable {
    fn column(&self) -> &'static str {
        match self {
            Variable::GammaB => "gamma_b_db",
            Variable::KDb => "k_factor_db",
            Variable::As => "azimuth_spread_deg",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    AepExact,
    AepClosed,
    AepSeries,
    AepApprox,
    AepMc,
    Pdf,
    Outage,
    Capacity,
    CapacityMc,
    Aof,
}

impl Output {
    fn columns(&self) -> Vec<&'static str> {
        match self {
            Output::AepExact => vec!["aep_exact"],
            Output::AepClosed => vec!["aep_closed"],
            Output::AepSeries => vec!["aep_series"],
            Output::AepApprox => vec!["aep_approx"],
            Output::AepMc => vec!["aep_mc", "aep_mc_se"],
            Output::Pdf => vec!["pdf"],
            Output::Outage => vec!["outage"],
            Output::Capacity => vec!["capacity", "capacity_terms"],
            Output::CapacityMc => vec!["capacity_mc", "capacity_mc_se"],
            Output::Aof => vec!["aof"],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(args) => match run_sweep(&args) {
            Ok(numeric_failures) => {
                if numeric_failures {
                    eprintln!("sweep finished with numeric failures (see flags column)");
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code_for(&e))
            }
        },
        Command::Validate(args) => run_validate(&args),
        Command::Presets => {
            run_presets();
            ExitCode::SUCCESS
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) | Error::Domain(_) => 1,
        _ => 2,
    }
}

fn build_scenario(args: &ScenarioArgs) -> Result<ChannelConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ChannelConfig>(&text)
                .map_err(|e| Error::Parameter(format!("invalid scenario file: {e}")))?
        }
        None => ChannelConfig::a1(4, 4, FadingCase::RicianRayleigh),
    };
    if let Some(name) = &args.preset {
        let p = presets::by_name(name)
            .ok_or_else(|| Error::Parameter(format!("unknown preset '{name}' (try: a1, c2, d1)")))?;
        cfg.k_factor_db = p.k_factor_db;
        cfg.theta_c_deg = p.theta_c_deg;
        cfg.antenna_spacing = p.antenna_spacing;
        match p.azimuth_spread_deg {
            Some(as_deg) => cfg.azimuth_spread_deg = as_deg,
            None => {
                if args.azimuth_spread_deg.is_none() {
                    return Err(Error::Parameter(format!(
                        "preset '{name}' does not fix the azimuth spread; pass --azimuth-spread-deg"
                    )));
                }
            }
        }
    }
    if let Some(v) = args.nr {
        cfg.nr = v;
    }
    if let Some(v) = args.nt {
        cfg.nt = v;
    }
    if let Some(v) = args.k_factor_db {
        cfg.k_factor_db = v;
    }
    if let Some(v) = args.azimuth_spread_deg {
        cfg.azimuth_spread_deg = v;
    }
    if let Some(v) = args.theta_c_deg {
        cfg.theta_c_deg = v;
    }
    if let Some(v) = args.antenna_spacing {
        cfg.antenna_spacing = v;
    }
    if let Some(v) = args.modulation_order {
        cfg.modulation_order = v;
    }
    if let Some(v) = args.fading_case {
        cfg.fading_case = v.into();
    }
    if let Some(v) = args.snr_per_symbol_db {
        cfg.snr_per_symbol_db = v;
    }
    if let Some(v) = args.gamma_b_db {
        cfg.set_gamma_b_db(v);
    }
    if args.interferer_mean_equal {
        if cfg.nt < 2 {
            return Err(Error::Parameter("--interferer-mean-equal needs nt >= 2".into()));
        }
        cfg.interferer_mean = Some(CMat::from_element(cfg.nr, cfg.nt - 1, Cx::new(1.0, 0.0)));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_sig(v: f64) -> String {
    // 12 significant digits, byte-stable across runs
    format!("{v:.11e}")
}

fn run_sweep(args: &SweepArgs) -> Result<bool, Error> {
    if args.grid.is_empty() {
        return Err(Error::Parameter("sweep grid must be nonempty".into()));
    }
    // `!(a < b)` on purpose: also rejects NaN grid values
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if args.grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("sweep grid must be strictly increasing".into()));
    }
    if args.outputs.contains(&Output::Pdf) && args.pdf_at.is_none() {
        return Err(Error::Parameter("the pdf output needs --pdf-at <linear snr>".into()));
    }
    let base = build_scenario(&args.scenario)?;
    let gamma_th = zfperf_core::db_to_linear(args.gamma_th_db);

    let mut header = vec![args.variable.column()];
    for o in &args.outputs {
        header.extend(o.columns());
    }
    header.push("flags");

    let mut text = String::new();
    let _ = writeln!(text, "# zfperf v{}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "# rng: {} seed: {} mc_samples: {}", mc::RNG_ID, args.seed, args.mc_samples);
    let _ = writeln!(
        text,
        "# scenario: {}",
        serde_json::to_string(&base).map_err(|e| Error::Parameter(e.to_string()))?
    );
    let _ = writeln!(text, "# variable: {}", args.variable.column());
    let _ = writeln!(text, "{}", header.join(","));

    // grid points run on the worker pool; rows keep grid order
    let results: Vec<(Vec<String>, Vec<String>, bool)> = args
        .grid
        .par_iter()
        .map(|&value| {
            let mut cfg = base.clone();
            match args.variable {
                Variable::GammaB => cfg.set_gamma_b_db(value),
                Variable::KDb => cfg.k_factor_db = value,
                Variable::As => cfg.azimuth_spread_deg = value,
            }
            sweep_point(args, &cfg, gamma_th)
        })
        .collect();
    let mut any_numeric_failure = false;
    for (&value, (cells, flags, numeric_failure)) in args.grid.iter().zip(results) {
        any_numeric_failure |= numeric_failure;
        let mut row = vec![fmt_sig(value)];
        row.extend(cells);
        row.push(flags.join(";"));
        let _ = writeln!(text, "{}", row.join(","));
    }

    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(any_numeric_failure)
}

/// Evaluate every requested output at one grid point. Failures blank the
/// cell, append a flag, and let the sweep continue.
fn sweep_point(args: &SweepArgs, cfg: &ChannelConfig, gamma_th: f64) -> (Vec<String>, Vec<String>, bool) {
    let mut cells = Vec::new();
    let mut flags = Vec::new();
    let mut numeric_failure = false;
    let m = cfg.modulation_order;

    let params = match derive_params(cfg) {
        Ok(p) => Some(p),
        Err(e) => {
            flags.push(format!("derive_failed:{}", flag_of(&e)));
            numeric_failure = true;
            None
        }
    };

    for output in &args.outputs {
        let width = output.columns().len();
        let Some(p) = &params else {
            cells.extend(std::iter::repeat_n(String::new(), width));
            continue;
        };
        let fail = |flags: &mut Vec<String>, cells: &mut Vec<String>, name: &str, e: &Error| {
            cells.extend(std::iter::repeat_n(String::new(), width));
            flags.push(format!("{name}_failed:{}", flag_of(e)));
        };
        match output {
            Output::AepExact => match perf::aep_exact_hyp(p, m) {
                Ok(r) => cells.push(fmt_sig(r.value)),
                Err(e) => {
                    fail(&mut flags, &mut cells, "aep_exact", &e);
                    numeric_failure = true;
                }
            },
            Output::AepClosed => match perf::aep_exact_closed(p, m) {
                Ok(r) => {
                    if r.low_snr_unreliable {
                        flags.push("aep_closed_low_snr_unreliable".into());
                    }
                    cells.push(fmt_sig(r.value));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "aep_closed", &e);
                    numeric_failure = true;
                }
            },
            Output::AepSeries => match perf::aep_exact_series(p, m, args.tol_series) {
                Ok(r) => {
                    if r.diagnostics.as_ref().is_some_and(|d| !d.converged) {
                        flags.push("aep_series_unconverged".into());
                    }
                    cells.push(fmt_sig(r.value));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "aep_series", &e);
                    numeric_failure = true;
                }
            },
            Output::AepApprox => match perf::aep_approx(p, &p.h_d, m) {
                Ok(r) => cells.push(fmt_sig(r.value)),
                Err(e) => {
                    fail(&mut flags, &mut cells, "aep_approx", &e);
                    numeric_failure = true;
                }
            },
            Output::AepMc => match mc::estimate_aep(cfg, args.mc_samples, args.seed) {
                Ok(e) => {
                    cells.push(fmt_sig(e.mean));
                    cells.push(fmt_sig(e.std_error));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "aep_mc", &e);
                    numeric_failure = true;
                }
            },
            Output::Pdf => match snr::snr_pdf(p, args.pdf_at.unwrap(), args.tol_series) {
                Ok(r) => {
                    if !r.converged {
                        flags.push("pdf_unconverged".into());
                    }
                    cells.push(fmt_sig(r.value));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "pdf", &e);
                    numeric_failure = true;
                }
            },
            Output::Outage => match snr::snr_outage(p, gamma_th, args.tol_series) {
                Ok(r) => {
                    if !r.converged {
                        flags.push("outage_unconverged".into());
                    }
                    cells.push(fmt_sig(r.value));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "outage", &e);
                    numeric_failure = true;
                }
            },
            Output::Capacity => match perf::ergodic_capacity(p, args.tol_capacity) {
                Ok(r) => {
                    if !r.converged {
                        flags.push("capacity_unconverged".into());
                    }
                    cells.push(fmt_sig(r.value));
                    cells.push(r.terms_used.to_string());
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "capacity", &e);
                    numeric_failure = true;
                }
            },
            Output::CapacityMc => match mc::estimate_capacity(cfg, args.mc_samples, args.seed) {
                Ok(e) => {
                    cells.push(fmt_sig(e.mean));
                    cells.push(fmt_sig(e.std_error));
                }
                Err(e) => {
                    fail(&mut flags, &mut cells, "capacity_mc", &e);
                    numeric_failure = true;
                }
            },
            Output::Aof => cells.push(fmt_sig(snr::amount_of_fading(p))),
        }
    }
    (cells, flags, numeric_failure)
}

fn flag_of(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Parameter(_) => "parameter",
        Error::NumericOverflow { .. } => "overflow",
        Error::Unstable { .. } => "unstable",
        Error::QuadratureNonConvergence { .. } => "quadrature",
        Error::NotPositiveDefinite(_) => "not_psd",
        Error::SingularMatrix(_) => "singular",
        Error::ExactLawUnavailable { .. } => "exact_law_unavailable",
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn run_validate(args: &ValidateArgs) -> ExitCode {
    let mut failed = false;
    let report = |name: &str, ok: bool, detail: String, failed: &mut bool| {
        println!("{} {name}: {detail}", if ok { "PASS " } else { "FAIL " });
        if !ok {
            *failed = true;
        }
    };
    let warn = |name: &str, msg: String| {
        println!("WARN  {name}: {msg}");
    };

    let cfg = match build_scenario(&args.scenario) {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL  scenario: {e}");
            return ExitCode::from(1);
        }
    };

    let dir_norm: f64 = cfg.direction().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    report("direction norm", (dir_norm - 1.0).abs() <= 1e-12, format!("|d| = {dir_norm}"), &mut failed);

    let params = match derive_params(&cfg) {
        Ok(p) => p,
        Err(e) => {
            println!("FAIL  derive_params: {e}");
            return ExitCode::from(1);
        }
    };

    match params.rinv11_via_full_inverse() {
        Ok(full) => {
            let rel = (full - params.rinv11).abs() / params.rinv11;
            report("Schur identity", rel <= 1e-10, format!("relative defect {rel:.2e}"), &mut failed);
        }
        Err(e) => report("Schur identity", false, e.to_string(), &mut failed),
    }

    match snr::snr_mgf(&params, 0.0, MgfMethod::Series) {
        Ok(v) => report("m.g.f. normalization", (v - 1.0).abs() <= 1e-10, format!("M(0) = {v}"), &mut failed),
        Err(e) => report("m.g.f. normalization", false, e.to_string(), &mut failed),
    }

    let m = cfg.modulation_order;
    let mut cross_ok = true;
    let mut detail = String::new();
    for gb in [5.0, 15.0, 25.0] {
        let mut c = cfg.clone();
        c.set_gamma_b_db(gb);
        let outcome = derive_params(&c).and_then(|p| {
            let reference = match p.fading_case {
                FadingCase::RicianRayleigh => perf::aep_exact_hyp(&p, m)?.value,
                _ => perf::aep_rayleigh(&p, m)?.value,
            };
            let series = perf::aep_exact_series(&p, m, 1e-10)?.value;
            Ok((reference, series))
        });
        match outcome {
            Ok((reference, series)) => {
                let d = (reference - series).abs();
                let _ = write!(detail, "Gb={gb}: |d|={d:.1e}  ");
                if d > 1e-6 {
                    cross_ok = false;
                }
            }
            Err(e) => {
                cross_ok = false;
                let _ = write!(detail, "Gb={gb}: {e}  ");
            }
        }
    }
    report("cross-form AEP agreement", cross_ok, detail, &mut failed);

    match mc::estimate_mean_frobenius_sq(&cfg, args.mc_samples, args.seed) {
        Ok(est) => {
            let target = (cfg.nr * cfg.nt) as f64;
            report(
                "MC channel normalization",
                (est.mean - target).abs() <= 3.0 * est.std_error,
                format!("E||H||^2 = {:.4} +/- {:.4} (target {target})", est.mean, est.std_error),
                &mut failed,
            );
        }
        Err(e) => report("MC channel normalization", false, e.to_string(), &mut failed),
    }
    match mc::snr_form_disagreement(&cfg, (args.mc_samples / 10).max(1000), args.seed) {
        Ok(w) => report("ratio vs Hermitian SNR forms", w <= 1e-10, format!("worst relative gap {w:.2e}"), &mut failed),
        Err(e) => report("ratio vs Hermitian SNR forms", false, e.to_string(), &mut failed),
    }

    match perf::ergodic_capacity(&params, 1e-5) {
        Ok(r) if r.converged => println!("PASS  capacity series: converged in {} terms", r.terms_used),
        Ok(r) => warn("capacity series", format!("did not converge within {} terms", r.terms_used)),
        Err(Error::Unstable { dynamic_range, .. }) => warn(
            "capacity series",
            format!("numerically unstable before convergence (dynamic range {dynamic_range:.1e}); reduce K or the SNR"),
        ),
        Err(e) => warn("capacity series", e.to_string()),
    }

    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_presets() {
    println!("built-in scenario presets:");
    for p in presets::ALL {
        let as_text = match p.azimuth_spread_deg {
            Some(v) => format!("{v} deg"),
            None => "required via --azimuth-spread-deg".into(),
        };
        println!(
            "  {:3}  K = {} dB, AS = {}, theta_c = {} deg, spacing = {} half-wavelengths",
            p.name, p.k_factor_db, as_text, p.theta_c_deg, p.antenna_spacing
        );
        println!("       {}", p.notes);
    }
    println!("default mean direction: (1, ..., 1)/sqrt(nr); override via the config file");
}
