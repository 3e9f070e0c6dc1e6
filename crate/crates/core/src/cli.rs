//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or
//! configuration error. Output files go to `--output`, else to
//! `$SNOWSIM_OUT_DIR/<name>.<ext>` when that variable is set, else stdout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{
    self, curve, min_alpha, verify_derivative_bound_with, verify_identities_with, IdentityReport,
};
use crate::error::{Error, Result};
use crate::experiments::{self, get_auto as auto, AdversarySpec, ConfigMap, KAlpha};
use crate::protocol::{default_max_round, default_tau, ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, default_max_rounds, NetworkState, RunOptions};

pub const OUT_DIR_VAR: &str = "SNOWSIM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "snowsim", version, about = "Snow-family consensus simulator and analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one run and print a summary.
    Run(RunArgs),
    /// Run a named experiment suite.
    Experiment(ExperimentArgs),
    /// Check the progress-function identities on a grid.
    Verify(VerifyArgs),
    /// Write delta(p) curves as CSV.
    Curves(CurvesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Inline override, repeatable; wins over the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long = "max-round")]
    pub max_round: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub p0: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// `none`, `flip-minority:F`, `split-groups:F` or `pin:F:b`; F may be `sqrt`.
    #[arg(long)]
    pub adversary: Option<String>,
    #[arg(long)]
    pub sampling: Option<String>,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<String>,
    #[arg(long = "stability-threshold")]
    pub stability_threshold: Option<String>,
    /// Write the per-round trace as CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment name; see `--list`.
    pub name: Option<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Master seed; shorthand for `--set seed=...`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// List experiments and exit.
    #[arg(long)]
    pub list: bool,
    /// Print the effective config and exit.
    #[arg(long = "print-config")]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    pub kmax: u32,
    #[arg(long = "p-step", default_value_t = analytic::DEFAULT_P_STEP)]
    pub p_step: f64,
    #[arg(long, default_value_t = analytic::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Largest alpha of the `k = 2 alpha - 1` derivative check.
    #[arg(long = "alpha-max", default_value_t = 10)]
    pub alpha_max: u32,
    #[arg(long = "fd-step", default_value_t = analytic::DEFAULT_FD_STEP)]
    pub fd_step: f64,
    /// Derivative bound slack.
    #[arg(long = "fd-tol", default_value_t = 1e-6)]
    pub fd_tol: f64,
    /// Test hook: adds `eps * p` to delta before checking.
    #[arg(long = "inject-fault", hide = true)]
    pub inject_fault: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Comma-separated `k:alpha` pairs.
    #[arg(long, default_value = "1:1,3:2,5:3,7:4,9:5,11:6,20:11,20:13,20:15,20:17,20:20")]
    pub pairs: String,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

const RUN_DEFAULTS: &[(&str, &str)] = &[
    ("protocol", "slush"),
    ("n", "1000"),
    ("k", "10"),
    ("alpha", "auto"),
    ("beta", "20"),
    ("max_round", "auto"),
    ("tau", "auto"),
    ("p0", "0.5"),
    ("seed", "1"),
    ("adversary", "none"),
    ("sampling", "all"),
    ("max_rounds", "auto"),
    ("stability_threshold", "auto"),
];

/// Parses `args` (program name first) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Curves(a) => cmd_curves(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_config(mut cfg: ConfigMap, args: &ConfigArgs) -> Result<ConfigMap> {
    if let Some(path) = &args.config {
        cfg.merge_file(path)?;
    }
    for s in &args.set {
        cfg.assign(s)?;
    }
    Ok(cfg)
}

/// `--output`, else the output directory variable, else `None` for stdout.
fn output_path(explicit: &Option<PathBuf>, stem: &str, ext: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        std::env::var_os(OUT_DIR_VAR).map(|d| Path::new(&d).join(format!("{stem}.{ext}")))
    })
}

fn with_sink<F>(path: Option<&Path>, out: &mut dyn Write, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

/// Builds the run configuration: defaults < file < `--set` < flags.
fn run_config(a: &RunArgs) -> Result<ConfigMap> {
    let mut cfg = load_config(ConfigMap::with_defaults(RUN_DEFAULTS), &a.config)?;
    let flags = [
        ("protocol", &a.protocol),
        ("n", &a.n),
        ("k", &a.k),
        ("alpha", &a.alpha),
        ("beta", &a.beta),
        ("max_round", &a.max_round),
        ("tau", &a.tau),
        ("p0", &a.p0),
        ("seed", &a.seed),
        ("adversary", &a.adversary),
        ("sampling", &a.sampling),
        ("max_rounds", &a.max_rounds),
        ("stability_threshold", &a.stability_threshold),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = run_config(a)?;
    let kind: ProtocolKind = cfg.get("protocol")?;
    let n: usize = cfg.get("n")?;
    let k: u32 = cfg.get("k")?;
    let alpha = auto(&cfg, "alpha")?.unwrap_or(min_alpha(k));
    let beta: u32 = cfg.get("beta")?;
    let p0: f64 = cfg.get("p0")?;
    let seed: u64 = cfg.get("seed")?;
    let adversary: AdversarySpec = cfg.get("adversary")?;
    let sampling: SamplingMode = cfg.get("sampling")?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Config(format!("p0 must lie in [0, 1], got {p0}")));
    }

    let mut params = ProtocolParams::new(kind, k, alpha).with_sampling(sampling);
    match kind {
        ProtocolKind::Slush => {
            params = params.with_max_round(auto(&cfg, "max_round")?.unwrap_or(default_max_round(n)))
        }
        ProtocolKind::Snowflake | ProtocolKind::Snowball => params = params.with_beta(beta),
        ProtocolKind::Blizzard => {
            params = params
                .with_beta(beta)
                .with_tau(auto(&cfg, "tau")?.unwrap_or(default_tau(n, beta)))
        }
    }
    params.validate()?;

    let mut options = RunOptions::new(auto(&cfg, "max_rounds")?.unwrap_or(default_max_rounds(n, beta)));
    if let Some(t) = auto(&cfg, "stability_threshold")? {
        options = options.with_stability_threshold(t);
    }
    let strategy = adversary.resolve(n)?;
    let start = NetworkState::with_share(kind, n, p0);
    let m = simulator::run(start, &params, strategy, seed, &options)?;

    writeln!(
        out,
        "protocol={kind} n={n} k={k} alpha={alpha} beta={} max_round={} tau={} p0={p0} seed={seed} adversary={strategy} sampling={sampling}",
        show(params.beta),
        show(params.max_round),
        show(params.tau),
    )?;
    writeln!(
        out,
        "rounds={} terminated={} stable_round={} decided={}/{n} agreement={} max_decision_round={} final_ones={}",
        m.rounds,
        m.terminated,
        m.stable_round.map_or("none".into(), |r| r.to_string()),
        m.decided_count(),
        m.agreement,
        m.max_decision_round().map_or("none".into(), |r| r.to_string()),
        m.s_trace.last().copied().unwrap_or_default(),
    )?;

    if let Some(path) = &a.trace {
        with_sink(Some(path), out, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["round", "ones", "bots", "delta"])?;
            for (i, (&s, &b)) in m.s_trace.iter().zip(&m.bot_trace).enumerate() {
                let d = if i == 0 { String::new() } else { m.delta_trace[i - 1].to_string() };
                csv.write_record([i.to_string(), s.to_string(), b.to_string(), d])?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }
    Ok(EXIT_OK)
}

fn show(x: u32) -> String {
    if x == crate::protocol::NEVER {
        "never".into()
    } else {
        x.to_string()
    }
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if a.list {
        for e in experiments::registry() {
            writeln!(out, "{:<22}{}", e.name, e.summary)?;
        }
        return Ok(EXIT_OK);
    }
    let Some(name) = a.name.as_deref() else {
        writeln!(err, "error: experiment name required (see --list)")?;
        return Ok(EXIT_USAGE);
    };
    let mut cfg = load_config(experiments::default_config(name)?, &a.config)?;
    if let Some(seed) = a.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if a.print_config {
        out.write_all(cfg.to_text().as_bytes())?;
        return Ok(EXIT_OK);
    }
    let result = experiments::run_experiment(name, &cfg)?;
    let path = output_path(&a.output, name, a.format.ext());
    with_sink(path.as_deref(), out, |w| match a.format {
        Format::Csv => result.write_csv(w),
        Format::Json => result.write_json(w),
    })?;
    writeln!(err, "{name}: wall time {:.2}s", result.wall_time.as_secs_f64())?;
    for c in &result.checks {
        writeln!(err, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    if let Some(p) = &path {
        writeln!(err, "wrote {}", p.display())?;
    }
    Ok(if result.all_passed() { EXIT_OK } else { EXIT_VIOLATION })
}

fn print_reports(out: &mut dyn Write, reports: &[IdentityReport]) -> Result<()> {
    writeln!(
        out,
        "{:<18} {:>8} {:<28} {:>8} {:>10} {:>12} result",
        "identity", "k", "alpha", "p_step", "tol", "max_viol"
    )?;
    for r in reports {
        writeln!(
            out,
            "{:<18} {:>8} {:<28} {:>8} {:>10.1e} {:>12.3e} {}",
            r.name,
            format!("{}..{}", r.k_range.0, r.k_range.1),
            r.alpha_rule,
            r.p_step,
            r.tolerance,
            r.max_violation,
            if r.pass { "PASS" } else { "FAIL" }
        )?;
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let eps = a.inject_fault.unwrap_or(0.0);
    let f = move |k: u32, alpha: u32, p: f64| {
        analytic::delta_at(k, alpha, p).unwrap_or(f64::NAN) + eps * p
    };
    let mut reports = verify_identities_with(&f, a.kmax, a.p_step, a.tol)?;
    reports.push(verify_derivative_bound_with(
        &f,
        a.alpha_max,
        a.p_step,
        a.fd_step,
        a.fd_tol,
    )?);
    print_reports(out, &reports)?;
    Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_curves(a: &CurvesArgs, out: &mut dyn Write) -> Result<i32> {
    let pairs: Vec<KAlpha> = a
        .pairs
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if pairs.is_empty() {
        return Err(Error::Config("no k:alpha pairs given".into()));
    }
    let mut rows = Vec::new();
    for &KAlpha { k, alpha } in &pairs {
        for (p, d) in curve(k, alpha, a.step)? {
            rows.push([k.to_string(), alpha.to_string(), p.to_string(), d.to_string()]);
        }
    }
    let path = output_path(&a.output, "curves", "csv");
    with_sink(path.as_deref(), out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["k", "alpha", "p", "delta"])?;
        for r in &rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    Ok(EXIT_OK)
}
