//! The `qcount` command line: run experiments, dump the four-oracle figure
//! data, print compiled pulse programs and run the self-check.
//!
//! Settings come from built-in defaults, then an optional flat TOML file
//! (`--config`), then flags. File keys use the flag names (`omega-hz`,
//! `b1-sigma`, ...); underscores are accepted too.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::circuit::OracleSpec;
use crate::counting::{acquire_series, fit_damped_cosine, phase_to_count, IdealBackend, SignalBackend, SignalSeries};
use crate::error::Error;
use crate::nmrengine::{NmrBackend, PulseMode, SpinSystem};
use crate::numfmt::format_sig;
use crate::pulsecompile::{compile_counting_sequence, solve_timing};
use crate::verify::{run_checks, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qcount",
    version,
    about = "Approximate quantum counting on a simulated two-spin NMR computer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Acquire one signal series and fit its frequency.
    Run(RunArgs),
    /// Write NMR series for all four one-bit oracles.
    Figure(FigureArgs),
    /// Print the compiled pulse program for one oracle.
    Compile(CompileArgs),
    /// Run the cross-module self-check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Ideal,
    Nmr,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Flat TOML file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Transverse relaxation time in seconds (`inf` disables decay).
    #[arg(long)]
    pub t2: Option<f64>,
    /// Resonance splitting in Hz.
    #[arg(long = "omega-hz")]
    pub omega_hz: Option<f64>,
    /// Scalar coupling in Hz.
    #[arg(long = "j-hz")]
    pub j_hz: Option<f64>,
    /// RF nutation frequency in Hz.
    #[arg(long = "omega1-hz")]
    pub omega1_hz: Option<f64>,
    #[arg(long = "b1-sigma")]
    pub b1_sigma: Option<f64>,
    /// Ensemble members sampled for B1 spread.
    #[arg(long)]
    pub samples: Option<usize>,
    /// `ideal` or `realistic`.
    #[arg(long = "pulse-mode")]
    pub pulse_mode: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// `f00`, `f01`, `f10`, `f11` or a truth table such as `0110`.
    #[arg(long)]
    pub oracle: Option<String>,
    #[arg(long)]
    pub rmax: Option<usize>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub rmax: Option<usize>,
    /// Directory for `f00.csv` .. `f11.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub oracle: Option<String>,
    /// Number of iteration blocks.
    #[arg(short = 'r', long = "repetitions", default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Replace the pseudo-Hadamard by its inverse in the circuit layer, to
    /// see the self-check fail.
    #[arg(long, hide = true)]
    pub flip_pseudo_hadamard: bool,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    pub oracle: Option<String>,
    pub rmax: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub t2: Option<f64>,
    #[serde(alias = "omega_hz")]
    pub omega_hz: Option<f64>,
    #[serde(alias = "j_hz")]
    pub j_hz: Option<f64>,
    #[serde(alias = "omega1_hz")]
    pub omega1_hz: Option<f64>,
    #[serde(alias = "b1_sigma")]
    pub b1_sigma: Option<f64>,
    pub samples: Option<usize>,
    #[serde(alias = "pulse_mode")]
    pub pulse_mode: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }
}

/// Fully resolved settings for `run`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub oracle: OracleSpec,
    pub r_max: usize,
    pub out: Option<PathBuf>,
    pub system: SpinSystem,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.r_max < 1 {
            return Err(CliError::Config("rmax must be at least 1".into()));
        }
        if self.backend == BackendKind::Nmr && self.oracle.n() != 1 {
            return Err(CliError::Config(format!(
                "the nmr backend only runs one-bit oracles, got {}",
                self.oracle
            )));
        }
        if self.backend == BackendKind::Nmr {
            self.system.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Failed(_) => EXIT_VERIFY_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Infeasible(m) => write!(f, "{m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleTiming { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

fn load_file(args: &SystemArgs) -> Result<FileConfig, CliError> {
    match &args.config {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

/// Defaults, then file, then flags.
pub fn resolve_system(args: &SystemArgs, file: &FileConfig) -> Result<SpinSystem, CliError> {
    let mut s = SpinSystem::default();
    let hz = |v: f64| 2.0 * std::f64::consts::PI * v;
    if let Some(v) = args.omega_hz.or(file.omega_hz) {
        s.omega = hz(v);
    }
    if let Some(v) = args.j_hz.or(file.j_hz) {
        s.j = v;
    }
    if let Some(v) = args.t2.or(file.t2) {
        s.t2 = v;
    }
    if let Some(v) = args.omega1_hz.or(file.omega1_hz) {
        s.omega1 = hz(v);
    }
    if let Some(v) = args.b1_sigma.or(file.b1_sigma) {
        s.b1_sigma = v;
    }
    if let Some(v) = args.samples.or(file.samples) {
        s.ensemble_samples = v;
    }
    if let Some(v) = args.seed.or(file.seed) {
        s.rng_seed = v;
    }
    if let Some(v) = args.pulse_mode.as_ref().or(file.pulse_mode.as_ref()) {
        s.pulse_mode = PulseMode::from_str(v)?;
    }
    Ok(s)
}

fn parse_oracle(text: Option<&String>) -> Result<OracleSpec, CliError> {
    match text {
        Some(t) => OracleSpec::from_str(t).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(OracleSpec::f01()),
    }
}

pub fn resolve_run(args: &RunArgs) -> Result<RunConfig, CliError> {
    let file = load_file(&args.system)?;
    let cfg = RunConfig {
        backend: args.backend.or(file.backend).unwrap_or(BackendKind::Ideal),
        oracle: parse_oracle(args.oracle.as_ref().or(file.oracle.as_ref()))?,
        r_max: args.rmax.or(file.rmax).unwrap_or(16),
        out: args.out.clone().or(file.out.clone()),
        system: resolve_system(&args.system, &file)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn backend_for(kind: BackendKind, system: &SpinSystem) -> Box<dyn SignalBackend> {
    match kind {
        BackendKind::Ideal => Box::new(IdealBackend::default()),
        BackendKind::Nmr => Box::new(NmrBackend::new(system.clone())),
    }
}

fn acquire(backend: &dyn SignalBackend, f: &OracleSpec, r_max: usize) -> Result<SignalSeries, CliError> {
    if r_max >= 2 {
        return Ok(acquire_series(backend, f, r_max)?);
    }
    // too short to fit, but still worth printing
    let raw = backend.signals(f, r_max)?;
    if raw[0].abs() < 1e-9 {
        return Err(Error::ZeroReference(raw[0]).into());
    }
    let points = raw.iter().enumerate().map(|(r, &v)| (r, v, v / raw[0])).collect();
    Ok(SignalSeries::from_raw_points(&backend.id(), &f.label(), points))
}

/// CSV with header `oracle,r,raw,normalized`, LF line endings.
pub fn series_csv(series: &SignalSeries) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(["oracle", "r", "raw", "normalized"]).map_err(fail)?;
    for p in &series.points {
        w.write_record([
            series.oracle_id.clone(),
            p.r.to_string(),
            format_sig(p.raw, 12),
            format_sig(p.value, 12),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

fn fit_summary(series: &SignalSeries, n_items: usize) -> String {
    let fit = match fit_damped_cosine(series) {
        Ok(fit) => fit,
        Err(e) => return format!("oracle={} fit=unavailable ({e})", series.oracle_id),
    };
    let (k_real, k) = phase_to_count(fit.phi_hat, n_items).expect("fitted phase is folded into [0, pi]");
    format!(
        "oracle={} backend={} phi_hat={} decay_rate={} amplitude={} k_real={} k_rounded={}",
        series.oracle_id,
        series.backend_id,
        format_sig(fit.phi_hat, 12),
        format_sig(fit.decay_rate, 12),
        format_sig(fit.amplitude, 12),
        format_sig(k_real, 12),
        k
    )
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Config(format!("stdout: {e}"))),
    }
}

pub fn cmd_run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let backend = backend_for(cfg.backend, &cfg.system);
    let series = acquire(backend.as_ref(), &cfg.oracle, cfg.r_max)?;
    emit(cfg.out.as_deref(), &series_csv(&series)?, stdout)?;
    let summary = fit_summary(&series, cfg.oracle.size());
    // keep stdout pure CSV when the CSV goes there
    let sink: &mut dyn Write = if cfg.out.is_some() { stdout } else { stderr };
    writeln!(sink, "{summary}").map_err(|e| CliError::Config(e.to_string()))
}

pub fn cmd_figure(args: &FigureArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file(&args.system)?;
    let system = resolve_system(&args.system, &file)?;
    system.validate()?;
    let r_max = args.rmax.or(file.rmax).unwrap_or(16);
    if r_max < 1 {
        return Err(CliError::Config("rmax must be at least 1".into()));
    }
    let dir = args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let backend = NmrBackend::new(system);
    for f in OracleSpec::one_bit_all() {
        let series = acquire(&backend, &f, r_max)?;
        let path = dir.join(format!("{}.csv", f.label()));
        fs::write(&path, series_csv(&series)?).map_err(|e| io_error(&path, e))?;
        writeln!(stdout, "{}", fit_summary(&series, 2)).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_compile(args: &CompileArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file(&args.system)?;
    let system = resolve_system(&args.system, &file)?;
    system.validate()?;
    let oracle = parse_oracle(args.oracle.as_ref().or(file.oracle.as_ref()))?;
    let timing = solve_timing(&system)?;
    let seq = compile_counting_sequence(&oracle, args.repetitions, &system)?;
    let text = format!(
        "# {} {} pulse_mode={} total_duration={}\n{}",
        seq.label,
        timing,
        system.pulse_mode,
        format_sig(seq.total_duration(&system), 12),
        seq
    );
    emit(args.out.as_deref().or(file.out.as_deref()), &text, stdout)
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file(&args.system)?;
    let system = resolve_system(&args.system, &file)?;
    let report = run_checks(&VerifyOptions {
        system,
        flip_pseudo_hadamard: args.flip_pseudo_hadamard,
    });
    writeln!(stdout, "{report}").map_err(|e| CliError::Config(e.to_string()))?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Failed("verification failed".into()))
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => resolve_run(a).and_then(|cfg| cmd_run(&cfg, stdout, stderr)),
        Command::Figure(a) => cmd_figure(a, stdout),
        Command::Compile(a) => cmd_compile(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "qcount: {e}");
            e.exit_code()
        }
    }
}
