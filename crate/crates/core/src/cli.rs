//! The `orlicz` command-line front end.
//!
//! Three subcommands: `fit` prints the moment-matching fit of a CSV series,
//! `sweep` tabulates the bounds along an ε grid, and `distort` tabulates the
//! worst-case density at a single ε.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible everywhere (some
//! statistic has no optimizer at any grid point), 4 solver failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::descent::{Method, SolverConfig};
use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::gamma_dist::{
    empirical_moments, fit_moment_matching, theoretical_moments, GammaParams, MomentMap,
    MomentSummary, Side,
};
use crate::ingest::{ingest_csv, values};
use crate::outcomes::Outcomes;
use crate::par::ExecMode;
use crate::quantize::{quantize, DEFAULT_DOF_EXPONENT};
use crate::risk::{
    lower_risk_outcomes, rn_derivative, upper_risk_outcomes, DistortedDensity, OptimResult,
};
use crate::sweep::{emit, run_sweep, OutputFormat, ParamSource, RunConfig, Sci, SweepHealth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "orlicz",
    version,
    about = "Lower and upper bounds on expectations of gamma-distributed quantities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a gamma law to a `date,value` CSV by moment matching.
    Fit(FitArgs),
    /// Regrets, risk measures and safety probabilities along an ε grid.
    Sweep(CommonArgs),
    /// Worst-case density at a single ε.
    Distort(DistortArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivergenceArg {
    Kl,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Newton,
    GradientFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Upper,
    Lower,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Two-column CSV: ISO-8601 date, positive value.
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Gamma shape and scale, `a,b`.
    #[arg(long, value_parser = parse_params, conflicts_with = "input", required_unless_present = "input")]
    pub params: Option<GammaParams>,
    /// Fit the gamma law to this CSV instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kl")]
    pub divergence: DivergenceArg,
    /// α of the α-divergence; 1 selects KL.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    /// `logstart,logend,count`; ε_i = 10^(logstart + (logend - logstart) i/(count - 1)).
    #[arg(long, default_value = "-5,-0.2,801", allow_hyphen_values = true)]
    pub eps_grid: String,
    /// Safety threshold X̄; adds the worst-case probabilities of `u <= X̄`.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Discretize with 2^dof atoms.
    #[arg(long, default_value_t = DEFAULT_DOF_EXPONENT)]
    pub dof: u32,
    /// Payoff exponent γ in X(u) = u^γ.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub exponent: f64,
    #[arg(long, value_enum, default_value = "newton")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub init_mu: f64,
    #[arg(long, default_value_t = 10.0)]
    pub init_t: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Start every ε from the initial point instead of the previous optimum.
    #[arg(long)]
    pub cold_start: bool,
    /// Run grid points one after another.
    #[arg(long)]
    pub sequential: bool,
    /// Record the wall-clock time in JSON metadata (breaks byte-identical output).
    #[arg(long)]
    pub timestamp: bool,
    /// Unit label carried into JSON metadata.
    #[arg(long)]
    pub units: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistortArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "upper")]
    pub side: SideArg,
}

fn parse_params(s: &str) -> std::result::Result<GammaParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected a,b, got {s:?}"));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad shape {:?}", parts[0]))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad scale {:?}", parts[1]))?;
    GammaParams::new(a, b).map_err(|e| e.to_string())
}

impl CommonArgs {
    pub fn run_config(&self) -> Result<RunConfig> {
        let source = match (&self.params, &self.input) {
            (Some(p), _) => ParamSource::Explicit(*p),
            (None, Some(path)) => ParamSource::Input(path.clone()),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "one of --params or --input is required".into(),
                ))
            }
        };
        let divergence = match self.divergence {
            DivergenceArg::Kl => DivergenceKind::KullbackLeibler,
            DivergenceArg::Alpha if self.alpha == 1.0 => DivergenceKind::KullbackLeibler,
            DivergenceArg::Alpha => DivergenceKind::Alpha,
        };
        let solver = SolverConfig {
            method: match self.method {
                MethodArg::Newton => Method::Newton,
                MethodArg::GradientFlow => Method::GradientFlow,
            },
            step: self.step,
            tol: self.tol,
            max_iter: self.max_iter,
            init_mu: self.init_mu,
            init_t: self.init_t,
            ..SolverConfig::default()
        };
        solver.validate()?;
        let config = RunConfig {
            source,
            divergence,
            alpha: self.alpha,
            grid: self.eps_grid.parse()?,
            threshold: self.threshold,
            dof: self.dof,
            exponent: self.exponent,
            solver,
            warm_start: !self.cold_start,
            exec: if self.sequential {
                ExecMode::Sequential
            } else {
                ExecMode::default()
            },
            units: self.units.clone(),
        };
        config.spec(1.0)?;
        Ok(config)
    }
}

/// Exit code for an error that ended a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::DegenerateSample(_)
        | Error::MalformedRow { .. }
        | Error::NonMonotoneDate { .. }
        | Error::Io(_) => EXIT_INPUT,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::DomainViolation(_)
        | Error::NonConvergence { .. }
        | Error::Normalization(_)
        | Error::OrderingViolation(_) => EXIT_SOLVER,
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `stdout` unless `--output` is given. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => {
            if code == EXIT_INFEASIBLE {
                let _ = writeln!(
                    stderr,
                    "warning: a statistic is infeasible at every grid point"
                );
            } else if code == EXIT_SOLVER {
                let _ = writeln!(stderr, "error: some cells did not converge");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Fit(args) => {
            let report = fit_command(&args.csv)?;
            with_output(&args.output, stdout, |w| {
                report.write(args.format.into(), w)
            })?;
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => {
            let config = args.run_config()?;
            let mut report = run_sweep(&config)?;
            if args.timestamp {
                report.metadata.timestamp = Some(chrono::Utc::now().to_rfc3339());
            }
            with_output(&args.output, stdout, |w| {
                emit(&report, args.format.into(), w)
            })?;
            Ok(match report.health() {
                SweepHealth::Ok => EXIT_OK,
                SweepHealth::InfeasibleColumn => EXIT_INFEASIBLE,
                SweepHealth::SolverFailure => EXIT_SOLVER,
            })
        }
        Command::Distort(args) => {
            let config = args.common.run_config()?;
            let side = match args.side {
                SideArg::Upper => Side::Upper,
                SideArg::Lower => Side::Lower,
            };
            let table = distort_command(&config, args.epsilon, side)?;
            with_output(&args.common.output, stdout, |w| {
                table.write(args.common.format.into(), w)
            })?;
            Ok(EXIT_OK)
        }
    }
}

fn with_output(
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => match f(stdout) {
            // a closed pipe (e.g. `| head`) just ends the output
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

/// Fitted parameters with the empirical / fitted moment comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub observations: usize,
    pub params: GammaParams,
    pub empirical: MomentSummary,
    pub fitted: MomentSummary,
}

pub fn fit_command(path: &std::path::Path) -> Result<FitReport> {
    fit_values(&values(&ingest_csv(path)?))
}

pub fn fit_values(samples: &[f64]) -> Result<FitReport> {
    let params = fit_moment_matching(samples)?;
    Ok(FitReport {
        observations: samples.len(),
        params,
        empirical: empirical_moments(samples)?,
        fitted: theoretical_moments(&params),
    })
}

impl FitReport {
    pub fn write(&self, format: OutputFormat, out: &mut dyn Write) -> io::Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            OutputFormat::Csv => {
                writeln!(out, "parameter,value")?;
                writeln!(out, "a,{}", Sci(self.params.shape()))?;
                writeln!(out, "b,{}", Sci(self.params.scale()))?;
                writeln!(out)?;
                writeln!(out, "statistic,Emp,Fit")?;
                let (e, f) = (&self.empirical, &self.fitted);
                for (name, x, y) in [
                    ("average", e.mean, f.mean),
                    ("variance", e.variance, f.variance),
                    ("skewness", e.skewness, f.skewness),
                    ("kurtosis", e.kurtosis, f.kurtosis),
                ] {
                    writeln!(out, "{name},{},{}", Sci(x), Sci(y))?;
                }
                Ok(())
            }
        }
    }
}

/// Worst-case density at one ε together with the optimum it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortTable {
    pub params: GammaParams,
    pub epsilon: f64,
    pub side: Side,
    pub optimum: OptimResult,
    pub density: DistortedDensity,
}

#[derive(Serialize)]
struct DistortJson<'a> {
    params: &'a GammaParams,
    epsilon: f64,
    side: Side,
    mu: f64,
    t: f64,
    value: f64,
    iterations: usize,
    mean_z: f64,
    u: &'a [f64],
    p: &'a [f64],
    #[serde(rename = "Z")]
    z: &'a [f64],
    #[serde(rename = "pZ")]
    pz: &'a [f64],
}

pub fn distort_command(config: &RunConfig, epsilon: f64, side: Side) -> Result<DistortTable> {
    let params = config.source.resolve()?;
    let spec = config.spec(epsilon)?;
    let sample = quantize(&params, config.dof)?;
    let map = MomentMap::new(config.exponent)?;
    let outcomes = Outcomes::from_payoff(&sample, &map);
    let optimum = match side {
        Side::Upper => upper_risk_outcomes(&spec, &outcomes, &config.solver, None)?,
        Side::Lower => lower_risk_outcomes(&spec, &outcomes, &config.solver, None)?,
    };
    let density = rn_derivative(&spec, &sample, &map, &optimum, side)?;
    Ok(DistortTable {
        params,
        epsilon,
        side,
        optimum,
        density,
    })
}

impl DistortTable {
    pub fn write(&self, format: OutputFormat, out: &mut dyn Write) -> io::Result<()> {
        let d = &self.density;
        match format {
            OutputFormat::Json => {
                let j = DistortJson {
                    params: &self.params,
                    epsilon: self.epsilon,
                    side: self.side,
                    mu: self.optimum.mu,
                    t: self.optimum.t,
                    value: self.optimum.value,
                    iterations: self.optimum.iterations,
                    mean_z: d.mean_z,
                    u: &d.grid,
                    p: &d.base_density,
                    z: &d.rn_values,
                    pz: &d.product,
                };
                serde_json::to_writer_pretty(&mut *out, &j)?;
                writeln!(out)
            }
            OutputFormat::Csv => {
                writeln!(out, "u,p,Z,pZ")?;
                for i in 0..d.grid.len() {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        Sci(d.grid[i]),
                        Sci(d.base_density[i]),
                        Sci(d.rn_values[i]),
                        Sci(d.product[i])
                    )?;
                }
                Ok(())
            }
        }
    }
}
