//! The `influence` command: simulate, fit, forecast, classify, correlate and
//! plot the time-reversed influence model from the shell.
//!
//! Exit codes are 0 on success, 1 when the library reports an error (the
//! variant name is printed on standard error) and 2 on usage errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use influence_core::{
    classify_regime, correlate, decode_model_document, discriminant, encode_model_document, eval_solution, fit, forecast,
    integrate, load_timeseries_csv, render_lineplot, write_forecast_csv, write_timeseries_csv, FitOptions, ModelDocument,
    PlotSeries, PlotSpec, Style, TimeSeries, REGIME_TOLERANCE,
};

/// Points used to draw a model curve over the data range.
const OVERLAY_SAMPLES: usize = 400;

#[derive(Debug, Parser)]
#[command(name = "influence", version, about = "Time-reversed influence model p'(t) = a·p(t) + b·p(−t)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a model on [−T, T] and write the trajectory as `t,value` CSV.
    Simulate {
        /// TOML model document with `a`, `b`, `c` and optional `[forcing]`.
        #[arg(long)]
        model: PathBuf,
        /// Half-width T of the symmetric time window.
        #[arg(long = "T", default_value_t = 5.0)]
        horizon: f64,
        /// RK4 step; shrunk to divide T exactly if needed.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit (a, b, c) to a `t,value` CSV and write a model document.
    ///
    /// Only observations with t ≥ 0 are used, so a trajectory written by
    /// `simulate` can be fitted directly. The fit report is printed on
    /// standard output. If the fit does not converge nothing is written and
    /// the exit code is 1.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Model document whose parameters start the iteration.
        #[arg(long)]
        seed: Option<PathBuf>,
        #[command(flatten)]
        options: FitFlags,
        /// Record a `created-at` Unix timestamp in the document metadata.
        #[arg(long)]
        timestamp: bool,
    },
    /// Write closed-form influence and its rate of change as `t,value,rate` CSV.
    ///
    /// The grid is from + k·step for k ≥ 1 up to from + horizon. Forcing in
    /// the model document is ignored.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the growth regime and the discriminant s = a² − b².
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// Relative width of the linear band around s = 0.
        #[arg(long, default_value_t = REGIME_TOLERANCE)]
        tol: f64,
    },
    /// Regress y on x over the time points both CSV files share.
    Correlate {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Render a CSV series as SVG, optionally with a model curve over it.
    Plot {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Debug, Args)]
struct FitFlags {
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    max_iterations: usize,
    #[arg(long, default_value_t = FitOptions::default().gradient_tolerance)]
    gradient_tolerance: f64,
    #[arg(long, default_value_t = FitOptions::default().step_tolerance)]
    step_tolerance: f64,
    #[arg(long, default_value_t = FitOptions::default().initial_damping)]
    initial_damping: f64,
}

impl From<&FitFlags> for FitOptions {
    fn from(f: &FitFlags) -> Self {
        FitOptions {
            max_iterations: f.max_iterations,
            gradient_tolerance: f.gradient_tolerance,
            step_tolerance: f.step_tolerance,
            initial_damping: f.initial_damping,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Model(influence_core::Error),
    Io { path: PathBuf, source: io::Error },
    NotConverged { iterations: usize },
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Model(e) => e.kind(),
            Failure::Io { .. } => "Io",
            Failure::NotConverged { .. } => "NotConverged",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Model(e) => e.fmt(f),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::NotConverged { iterations } => write!(f, "fit did not converge in {iterations} iterations"),
        }
    }
}

impl From<influence_core::Error> for Failure {
    fn from(e: influence_core::Error) -> Self {
        Failure::Model(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|source| Failure::Io { path: path.to_path_buf(), source })
}

fn read_series(path: &Path) -> Result<TimeSeries, Failure> {
    Ok(load_timeseries_csv(&read(path)?)?)
}

fn read_model(path: &Path) -> Result<ModelDocument, Failure> {
    Ok(decode_model_document(&read(path)?)?)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so `path` is either untouched or complete.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io_err = |source| Failure::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn unix_seconds() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Simulate { model, horizon, h, out: path } => {
            let doc = read_model(&model)?;
            let trajectory = integrate(&doc.params, &doc.forcing_or_none(), horizon, h)?;
            write_atomic(&path, &write_timeseries_csv(&trajectory.to_series())?)?;
        }
        Command::Fit { data, out: path, seed, options, timestamp } => {
            let series = read_series(&data)?;
            let observed = series.filter_times(|t| t >= 0.0);
            if observed.len() < series.len() {
                let _ = writeln!(err, "note: ignoring {} observations with t < 0", series.len() - observed.len());
            }
            let seed = seed.as_deref().map(read_model).transpose()?.map(|d| d.params);
            let result = fit(&observed, seed.as_ref(), &FitOptions::from(&options))?;
            let regime = classify_regime(&result.params, REGIME_TOLERANCE);
            let p = result.params;
            let _ = writeln!(out, "a = {}\nb = {}\nc = {}", p.a, p.b, p.c);
            let _ = writeln!(out, "rss = {}\niterations = {}\nconverged = {}", result.rss, result.iterations, result.converged);
            let _ = writeln!(out, "regime = {regime}");
            if result.degenerate_growth {
                let _ = writeln!(err, "note: a + b is indistinguishable from zero; a and b are not separately identified");
            }
            if !result.converged {
                return Err(Failure::NotConverged { iterations: result.iterations });
            }
            let mut doc = ModelDocument::new(p);
            doc.metadata.insert("rss".into(), result.rss.to_string());
            doc.metadata.insert("iterations".into(), result.iterations.to_string());
            doc.metadata.insert("converged".into(), result.converged.to_string());
            doc.metadata.insert("regime".into(), regime.to_string());
            if timestamp {
                doc.metadata.insert("created-at".into(), unix_seconds().to_string());
            }
            write_atomic(&path, &encode_model_document(&doc)?)?;
        }
        Command::Forecast { model, from, horizon, step, out: path } => {
            let doc = read_model(&model)?;
            if doc.forcing.is_some() {
                let _ = writeln!(err, "note: forecast uses the unforced closed form; forcing is ignored");
            }
            let (influence, rate) = forecast(&doc.params, from, horizon, step)?;
            write_atomic(&path, &write_forecast_csv(&influence, &rate)?)?;
        }
        Command::Classify { model, tol } => {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(influence_core::Error::InvalidArgument(format!("tol must be ≥ 0, got {tol}")).into());
            }
            let doc = read_model(&model)?;
            let d = discriminant(&doc.params);
            let _ = writeln!(out, "{}", classify_regime(&doc.params, tol));
            let _ = writeln!(out, "s = {}\nrate = {}", d.s, d.rate);
        }
        Command::Correlate { x, y } => {
            let r = correlate(&read_series(&x)?, &read_series(&y)?)?;
            let _ = writeln!(out, "slope = {}\nintercept = {}\npearson = {}\nn = {}", r.slope, r.intercept, r.pearson, r.n);
        }
        Command::Plot { data, model, out: path, title } => {
            let series = read_series(&data)?;
            let title = title.unwrap_or_else(|| data.display().to_string());
            let spec = match model {
                None => PlotSpec::new(title).with_series(PlotSeries::new("data", series, Style::Line)),
                Some(model) => {
                    let params = read_model(&model)?.params;
                    let (lo, hi) = (series.times()[0], series.times()[series.len() - 1]);
                    let times: Vec<f64> = if hi > lo {
                        (0..OVERLAY_SAMPLES).map(|k| lo + (hi - lo) * k as f64 / (OVERLAY_SAMPLES - 1) as f64).collect()
                    } else {
                        vec![lo]
                    };
                    let values = times.iter().map(|&t| eval_solution(&params, t)).collect::<Result<Vec<_>, _>>()?;
                    let label = format!("model a = {}, b = {}, c = {}", params.a, params.b, params.c);
                    PlotSpec::new(title)
                        .with_series(PlotSeries::new("data", series, Style::Scatter))
                        .with_series(PlotSeries::new(label, TimeSeries::new(times, values)?, Style::Line))
                }
            };
            write_atomic(&path, &render_lineplot(&spec)?)?;
        }
    }
    Ok(())
}

/// Runs one invocation, writing human-readable results to `out` and
/// diagnostics to `err`, and returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(failure) => {
            let _ = writeln!(err, "error[{}]: {failure}", failure.kind());
            1
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}
