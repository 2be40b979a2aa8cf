//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid options or input, 3 fit failure,
//! 4 flat spectrum, 5 value outside the calibration band.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{summarize, EnsembleSummary};
use crate::error::Error;
use crate::io::{self, FormatError, SeriesQuantity, SCHEMA_VERSION};
use crate::lattice::{fit_inverse_volume, regress_d_vs_vinv};
use crate::lineshape::{fit_doublet, linspace, simulate_spectrum, DoubletFit, DoubletParams};
use crate::thermal::{eval_model, fit_calibration, invert_temperature, model_compare, CalibrationModel, ModelKind};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "VB_ODMR_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FIT_FAILED: i32 = 3;
pub const EXIT_FLAT_SPECTRUM: i32 = 4;
pub const EXIT_OUT_OF_RANGE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "vb-odmr", version, about = "ODMR fitting and zero-field-splitting thermometry for hBN spin defects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-dip spectrum.
    Simulate(SimulateArgs),
    /// Fit the two-Lorentzian model to one or more spectra.
    FitSpectrum(FitSpectrumArgs),
    /// Fit a temperature calibration law to a D(T) or E(T) series.
    Calibrate(CalibrateArgs),
    /// Fit several calibration laws to the same series and tabulate diagnostics.
    Compare(CompareArgs),
    /// Convert a measured D into a temperature with a saved calibration.
    Invert(InvertArgs),
    /// Regress D against the inverse lattice volume.
    Correlate(CorrelateArgs),
    /// Ensemble mean, standard error and histogram.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Axial splitting D (MHz).
    #[arg(long)]
    pub d: f64,
    /// Transverse splitting E (MHz).
    #[arg(long)]
    pub e: f64,
    /// FWHM of both dips (MHz).
    #[arg(long, default_value_t = 40.0)]
    pub gamma: f64,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long, default_value_t = 0.046)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.046)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub baseline: f64,
    /// First grid frequency (MHz).
    #[arg(long = "from", default_value_t = 3000.0)]
    pub from: f64,
    /// Last grid frequency (MHz).
    #[arg(long = "to", default_value_t = 4000.0)]
    pub to: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Gaussian noise standard deviation; requires --seed when positive.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spectrum CSV path. The generating parameters go next to it as JSON.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitSpectrumArgs {
    /// Spectrum CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Report path (single input only).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Directory for per-input reports named `<stem>.fit.json`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for batch fitting.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// D-series or E-series CSV.
    pub input: PathBuf,
    #[arg(long, default_value = "varshni")]
    pub kind: String,
    /// Calibration JSON path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Fitted-curve TSV path (defaults next to the JSON).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    /// Comma-separated model kinds.
    #[arg(long, default_value = "varshni,modified-varshni,poly3,poly5")]
    pub kinds: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Calibration JSON written by `calibrate`.
    #[arg(long)]
    pub calibration: PathBuf,
    /// Measured D (MHz).
    #[arg(long, allow_hyphen_values = true)]
    pub d: f64,
    /// 1-sigma uncertainty of D (MHz).
    #[arg(long, default_value_t = 0.0)]
    pub sigma_d: f64,
    /// Report path; printed to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Lattice CSV.
    #[arg(long)]
    pub lattice: PathBuf,
    /// D-series CSV.
    #[arg(long)]
    pub d_series: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// TSV of (1/V, D) pairs (defaults next to the JSON).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Values CSV.
    pub input: PathBuf,
    #[arg(long)]
    pub bin_width: f64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Histogram TSV (defaults next to the JSON).
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } => EXIT_INVALID,
            CliError::Input { source: FormatError::Data(e), .. } | CliError::Core(e) => core_exit_code(e),
            CliError::Input { .. } => EXIT_INVALID,
        }
    }
}

fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::FlatSpectrum => EXIT_FLAT_SPECTRUM,
        Error::FitDiverged { .. } | Error::SingularNormalMatrix | Error::NonFiniteResidual => EXIT_FIT_FAILED,
        Error::OutOfCalibrationRange { .. } => EXIT_OUT_OF_RANGE,
        _ => EXIT_INVALID,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::FitSpectrum(a) => cmd_fit_spectrum(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn out_or_default(out: &Option<PathBuf>, name: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| output_dir().join(name))
}

/// `dir/name.json` -> `dir/name.<suffix>`.
fn companion(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.to_owned(), source: FormatError::Io(e) })
}

fn parse_input<T>(path: &Path, parse: impl Fn(&str) -> Result<T, FormatError>) -> Result<T, CliError> {
    let text = read_input(path)?;
    parse(&text).map_err(|source| CliError::Input { path: path.to_owned(), source })
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    io::write_atomic(path, contents.as_bytes()).map_err(|source| CliError::Output { path: path.to_owned(), source })
}

#[derive(Serialize)]
struct SimulationSidecar {
    schema_version: &'static str,
    document: &'static str,
    d_mhz: f64,
    e_mhz: f64,
    params: DoubletParams,
    from_mhz: f64,
    to_mhz: f64,
    points: usize,
    noise_sigma: f64,
    seed: Option<u64>,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    if a.noise < 0.0 || !a.noise.is_finite() {
        return Err(CliError::Usage(format!("--noise must be >= 0, got {}", a.noise)));
    }
    if a.noise > 0.0 && a.seed.is_none() {
        return Err(CliError::Usage("--seed is required when --noise is positive".into()));
    }
    if a.points < crate::lineshape::MIN_POINTS || !(a.to > a.from) {
        return Err(CliError::Usage(format!(
            "need --points >= {} and --to > --from",
            crate::lineshape::MIN_POINTS
        )));
    }
    let zfs = crate::spin::ZfsParams::new(a.d, a.e).map_err(|e| CliError::Usage(e.to_string()))?;
    let t = crate::spin::transitions_from_zfs(&zfs);
    let params = DoubletParams {
        nu1: t.nu1(),
        nu2: t.nu2(),
        gamma1: a.gamma1.unwrap_or(a.gamma),
        gamma2: a.gamma2.unwrap_or(a.gamma),
        c1: a.c1,
        c2: a.c2,
        baseline: a.baseline,
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = linspace(a.from, a.to, a.points);
    let spectrum = simulate_spectrum(&params, &grid, a.noise, a.seed.unwrap_or(0))?;
    let out = out_or_default(&a.out, "spectrum.csv");
    write_output(&out, &io::write_spectrum(&spectrum))?;
    let sidecar = SimulationSidecar {
        schema_version: SCHEMA_VERSION,
        document: "simulation",
        d_mhz: a.d,
        e_mhz: a.e,
        params,
        from_mhz: a.from,
        to_mhz: a.to,
        points: a.points,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    write_output(&companion(&out, "json"), &io::to_json(&sidecar))
}

/// JSON report of a doublet fit.
#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct FitSpectrumReport {
    pub schema_version: String,
    pub document: String,
    pub input: String,
    pub nu1: f64,
    pub nu2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub baseline: f64,
    pub sigma_nu1: f64,
    pub sigma_nu2: f64,
    pub sigma_gamma1: f64,
    pub sigma_gamma2: f64,
    pub sigma_c1: f64,
    pub sigma_c2: f64,
    pub sigma_baseline: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "sigma_D")]
    pub sigma_d: f64,
    #[serde(rename = "sigma_E")]
    pub sigma_e: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    pub termination: String,
    pub covariance: Vec<Vec<f64>>,
}

impl FitSpectrumReport {
    pub fn new(input: &str, fit: &DoubletFit) -> Self {
        let p = &fit.params;
        let s = fit.std_errors();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            document: "doublet-fit".into(),
            input: input.into(),
            nu1: p.nu1,
            nu2: p.nu2,
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            c1: p.c1,
            c2: p.c2,
            baseline: p.baseline,
            sigma_nu1: s[0],
            sigma_nu2: s[1],
            sigma_gamma1: s[2],
            sigma_gamma2: s[3],
            sigma_c1: s[4],
            sigma_c2: s[5],
            sigma_baseline: s[6],
            d: fit.zfs.d(),
            e: fit.zfs.e(),
            sigma_d: fit.sigma_d,
            sigma_e: fit.sigma_e,
            residual_rms: fit.residual_rms,
            converged: fit.converged,
            iterations: fit.iterations,
            termination: format!("{:?}", fit.termination),
            covariance: fit.covariance.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

fn fit_one(input: &Path, out: &Path) -> Result<FitSpectrumReport, CliError> {
    let spectrum = parse_input(input, io::parse_spectrum)?;
    let fit = fit_doublet(&spectrum, None)?;
    let report = FitSpectrumReport::new(&input.display().to_string(), &fit);
    write_output(out, &io::to_json(&report))?;
    Ok(report)
}

fn report_path(input: &Path, dir: &Path) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "spectrum".into());
    dir.join(format!("{stem}.fit.json"))
}

fn cmd_fit_spectrum(a: &FitSpectrumArgs) -> Result<(), CliError> {
    if a.out.is_some() && a.inputs.len() > 1 {
        return Err(CliError::Usage("--out takes a single input; use --out-dir for batches".into()));
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let dir = a.out_dir.clone().unwrap_or_else(output_dir);
    let targets: Vec<(PathBuf, PathBuf)> = a
        .inputs
        .iter()
        .map(|i| (i.clone(), a.out.clone().unwrap_or_else(|| report_path(i, &dir))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<FitSpectrumReport, CliError>> =
        pool.install(|| targets.par_iter().map(|(i, o)| fit_one(i, o)).collect());

    let mut first_err = None;
    for ((input, _), res) in targets.iter().zip(results) {
        match res {
            Ok(r) => println!(
                "{}: D = {} +/- {} MHz, E = {} +/- {} MHz",
                input.display(),
                r.d,
                r.sigma_d,
                r.e,
                r.sigma_e
            ),
            Err(e) => {
                eprintln!("error: {}: {e}", input.display());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    let kind: ModelKind = a.kind.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let (quantity, series) = parse_input(&a.input, io::parse_series)?;
    let model = fit_calibration(kind, &series)?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    let out = out_or_default(&a.out, "calibration.json");
    write_output(&out, &io::write_calibration(&model))?;
    let curve_path = a.curve.clone().unwrap_or_else(|| companion(&out, "curve.tsv"));
    let column = match quantity {
        SeriesQuantity::D => "d_fit_mhz",
        SeriesQuantity::E => "e_fit_mhz",
    };
    write_output(&curve_path, &fitted_curve(&model, column)?)
}

fn fitted_curve(model: &CalibrationModel, column: &str) -> Result<String, CliError> {
    let steps = (model.t_max - model.t_min).ceil() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = (model.t_min + k as f64).min(model.t_max);
        rows.push(vec![t, eval_model(model, t)?]);
    }
    Ok(io::write_tsv(&["temp_k", column], rows))
}

#[derive(Serialize)]
struct CompareReport {
    schema_version: &'static str,
    document: &'static str,
    rows: Vec<crate::thermal::ComparisonRow>,
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let kinds = a
        .kinds
        .split(',')
        .map(|k| k.trim().parse::<ModelKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, series) = parse_input(&a.input, io::parse_series)?;
    let rows = model_compare(&series, &kinds)?;
    for r in &rows {
        println!(
            "{:<17} ssr = {:<12.6e} max|res| = {:<10.4} monotone = {:<5} extrapolation monotone = {}",
            r.kind.as_str(),
            r.ssr,
            r.max_abs_residual,
            r.monotone_decreasing,
            r.extrapolation_monotone
        );
    }
    let out = out_or_default(&a.out, "comparison.json");
    write_output(&out, &io::to_json(&CompareReport { schema_version: SCHEMA_VERSION, document: "comparison", rows }))
}

#[derive(Serialize)]
struct InvertReport {
    schema_version: &'static str,
    document: &'static str,
    d_mhz: f64,
    sigma_d_mhz: f64,
    temperature_k: f64,
    sigma_t_k: f64,
}

fn cmd_invert(a: &InvertArgs) -> Result<(), CliError> {
    let model = parse_input(&a.calibration, io::parse_calibration)?;
    let inv = invert_temperature(&model, a.d, a.sigma_d)?;
    let json = io::to_json(&InvertReport {
        schema_version: SCHEMA_VERSION,
        document: "inversion",
        d_mhz: a.d,
        sigma_d_mhz: a.sigma_d,
        temperature_k: inv.temperature,
        sigma_t_k: inv.sigma_t,
    });
    match &a.out {
        Some(p) => write_output(p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CorrelateReport {
    schema_version: &'static str,
    document: &'static str,
    slope_ghz_a3: f64,
    slope_sigma_ghz_a3: f64,
    intercept_ghz: f64,
    intercept_sigma_ghz: f64,
    r_squared: f64,
    n: usize,
    vinv_model: CalibrationModel,
}

fn cmd_correlate(a: &CorrelateArgs) -> Result<(), CliError> {
    let records = parse_input(&a.lattice, io::parse_lattice)?;
    let (quantity, series) = parse_input(&a.d_series, io::parse_series)?;
    if quantity != SeriesQuantity::D {
        return Err(CliError::Usage("--d-series must have header temp_k,d_mhz".into()));
    }
    let vinv_model = fit_inverse_volume(&records)?;
    let (reg, points) = regress_d_vs_vinv(&series, &vinv_model)?;
    let out = out_or_default(&a.out, "correlation.json");
    write_output(
        &out,
        &io::to_json(&CorrelateReport {
            schema_version: SCHEMA_VERSION,
            document: "correlation",
            slope_ghz_a3: reg.slope,
            slope_sigma_ghz_a3: reg.slope_sigma,
            intercept_ghz: reg.intercept,
            intercept_sigma_ghz: reg.intercept_sigma,
            r_squared: reg.r_squared,
            n: reg.n,
            vinv_model,
        }),
    )?;
    let pairs = a.pairs.clone().unwrap_or_else(|| companion(&out, "pairs.tsv"));
    write_output(
        &pairs,
        &io::write_tsv(&["temp_k", "vinv_a-3", "d_mhz"], points.iter().map(|p| vec![p.t, p.vinv, p.d])),
    )
}

#[derive(Serialize)]
struct StatsReport<'a> {
    schema_version: &'static str,
    document: &'static str,
    #[serde(flatten)]
    summary: &'a EnsembleSummary,
}

fn cmd_stats(a: &StatsArgs) -> Result<(), CliError> {
    let values = parse_input(&a.input, io::parse_values)?;
    let summary = summarize(&values, a.bin_width)?;
    let out = out_or_default(&a.out, "stats.json");
    write_output(
        &out,
        &io::to_json(&StatsReport { schema_version: SCHEMA_VERSION, document: "ensemble-summary", summary: &summary }),
    )?;
    let hist = a.histogram.clone().unwrap_or_else(|| companion(&out, "histogram.tsv"));
    write_output(
        &hist,
        &io::write_tsv(
            &["bin_lower_mhz", "bin_upper_mhz", "count"],
            summary.histogram.iter().map(|b| vec![b.lower, b.upper, b.count as f64]),
        ),
    )
}
