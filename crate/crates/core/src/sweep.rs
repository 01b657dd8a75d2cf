//! ε sweeps: the five bounds (and optionally two safety probabilities) of the
//! identity or moment payoff along a logarithmic grid of ε values.

use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descent::SolverConfig;
use crate::divergence::{DivergenceKind, DivergenceSpec};
use crate::error::{Error, Result};
use crate::gamma_dist::{fit_moment_matching, GammaParams, MomentMap, Side};
use crate::ingest::{ingest_csv, values};
use crate::outcomes::Outcomes;
use crate::par::{self, ExecMode};
use crate::quantize::{quantize, DiscreteSample, DEFAULT_DOF_EXPONENT};
use crate::regret::{lower_regret_outcomes, upper_regret_outcomes};
use crate::risk::{
    lower_risk_outcomes, upper_risk_outcomes, weighted_mass_below, worst_case_weights, OptimResult,
    NORMALIZATION_TOL,
};

/// Absolute slack allowed in `W <= R_ <= E[X] <= R̄ <= V`.
pub const ORDERING_SLACK: f64 = 1e-7;

/// `ε_i = 10^(log_start + (log_end - log_start) i / (count - 1))`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub log_start: f64,
    pub log_end: f64,
    pub count: usize,
}

impl Default for EpsGrid {
    /// `ε = 10^(-5 + 6i/1000)` for `i = 0..=800`.
    fn default() -> Self {
        EpsGrid {
            log_start: -5.0,
            log_end: -0.2,
            count: 801,
        }
    }
}

impl EpsGrid {
    pub fn new(log_start: f64, log_end: f64, count: usize) -> Result<Self> {
        if !(log_start.is_finite() && log_end.is_finite()) || log_start > log_end || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon grid needs finite log-start <= log-end and count >= 1, got {log_start},{log_end},{count}"
            )));
        }
        if count == 1 && log_start != log_end {
            return Err(Error::InvalidParameter(
                "a single-point epsilon grid needs log-start = log-end".into(),
            ));
        }
        Ok(EpsGrid {
            log_start,
            log_end,
            count,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![10f64.powf(self.log_start)];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let (i, j) = (i as f64, last - i as f64);
                10f64.powf((self.log_start * j + self.log_end * i) / last)
            })
            .collect()
    }
}

impl FromStr for EpsGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("expected logstart,logend,count, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let log_start = parts[0].parse().map_err(|_| bad())?;
        let log_end = parts[1].parse().map_err(|_| bad())?;
        let count = parts[2].parse().map_err(|_| bad())?;
        EpsGrid::new(log_start, log_end, count)
    }
}

/// Where the gamma law comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Explicit(GammaParams),
    /// Fitted by moment matching to a `date,value` CSV.
    Input(PathBuf),
}

impl ParamSource {
    pub fn resolve(&self) -> Result<GammaParams> {
        match self {
            ParamSource::Explicit(p) => Ok(*p),
            ParamSource::Input(path) => fit_moment_matching(&values(&ingest_csv(path)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ParamSource,
    pub divergence: DivergenceKind,
    /// Ignored for KL.
    pub alpha: f64,
    pub grid: EpsGrid,
    /// Safety threshold `X̄`; enables the probability columns.
    pub threshold: Option<f64>,
    pub dof: u32,
    /// Payoff `X(u) = u^exponent`.
    pub exponent: f64,
    pub solver: SolverConfig,
    pub warm_start: bool,
    pub exec: ExecMode,
    pub units: Option<String>,
}

impl RunConfig {
    pub fn new(source: ParamSource) -> Self {
        RunConfig {
            source,
            divergence: DivergenceKind::KullbackLeibler,
            alpha: 1.0,
            grid: EpsGrid::default(),
            threshold: None,
            dof: DEFAULT_DOF_EXPONENT,
            exponent: 1.0,
            solver: SolverConfig::default(),
            warm_start: true,
            exec: ExecMode::default(),
            units: None,
        }
    }

    /// Divergence at a given ε.
    pub fn spec(&self, epsilon: f64) -> Result<DivergenceSpec> {
        DivergenceSpec::new(self.divergence, self.alpha, epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Converged,
    /// No optimizing pair exists.
    Infeasible,
    NotConverged,
    /// Any other error, including a failed normalization check.
    Failed,
}

/// One value per optimized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Columns<T> {
    #[serde(rename = "W")]
    pub w: T,
    #[serde(rename = "R_lower")]
    pub r_lower: T,
    #[serde(rename = "R_upper")]
    pub r_upper: T,
    #[serde(rename = "V")]
    pub v: T,
}

impl<T> Columns<T> {
    pub fn as_array(&self) -> [&T; 4] {
        [&self.w, &self.r_lower, &self.r_upper, &self.v]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    #[serde(rename = "R_lower")]
    pub r_lower: Option<f64>,
    pub mean: f64,
    #[serde(rename = "R_upper")]
    pub r_upper: Option<f64>,
    #[serde(rename = "V")]
    pub v: Option<f64>,
    #[serde(rename = "P_lower")]
    pub p_lower: Option<f64>,
    #[serde(rename = "P_upper")]
    pub p_upper: Option<f64>,
    pub iterations: Columns<usize>,
    pub converged: Columns<bool>,
    pub status: Columns<CellStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub params: GammaParams,
    pub divergence: DivergenceKind,
    pub alpha: Option<f64>,
    pub exponent: f64,
    pub dof: u32,
    pub atoms: usize,
    pub grid: EpsGrid,
    pub threshold: Option<f64>,
    pub solver: SolverConfig,
    pub warm_start: bool,
    pub units: Option<String>,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metadata: Metadata,
    pub rows: Vec<SweepRow>,
}

/// Overall outcome of a sweep, for exit-code reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepHealth {
    Ok,
    /// At least one statistic is infeasible at every grid point.
    InfeasibleColumn,
    /// Some cell did not converge or failed.
    SolverFailure,
}

impl SweepReport {
    pub fn health(&self) -> SweepHealth {
        let statuses = || self.rows.iter().flat_map(|r| r.status.as_array());
        if statuses().any(|s| matches!(s, CellStatus::NotConverged | CellStatus::Failed)) {
            return SweepHealth::SolverFailure;
        }
        let column_dead = |pick: fn(&Columns<CellStatus>) -> CellStatus| {
            !self.rows.is_empty()
                && self
                    .rows
                    .iter()
                    .all(|r| pick(&r.status) == CellStatus::Infeasible)
        };
        if column_dead(|c| c.w)
            || column_dead(|c| c.r_lower)
            || column_dead(|c| c.r_upper)
            || column_dead(|c| c.v)
        {
            SweepHealth::InfeasibleColumn
        } else {
            SweepHealth::Ok
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    W,
    RLower,
    RUpper,
    V,
}

const COLUMNS: [Column; 4] = [Column::W, Column::RLower, Column::RUpper, Column::V];

#[derive(Debug, Clone, Copy)]
struct Cell {
    value: Option<f64>,
    status: CellStatus,
    iterations: usize,
    /// `(μ, t)` at the optimum; `μ = 0` for regrets.
    point: Option<(f64, f64)>,
    probability: Option<f64>,
}

impl Cell {
    fn from_error(e: &Error) -> Cell {
        let (status, iterations) = match e {
            Error::Infeasible(_) => (CellStatus::Infeasible, 0),
            Error::NonConvergence { iterations, .. } => (CellStatus::NotConverged, *iterations),
            _ => (CellStatus::Failed, 0),
        };
        Cell {
            value: None,
            status,
            iterations,
            point: None,
            probability: None,
        }
    }
}

struct Context<'a> {
    config: &'a RunConfig,
    sample: &'a DiscreteSample,
    outcomes: &'a Outcomes,
}

impl Context<'_> {
    fn solve(&self, column: Column, epsilon: f64, start: Option<(f64, f64)>) -> Cell {
        match self.try_solve(column, epsilon, start) {
            Ok(cell) => cell,
            Err(e) => Cell::from_error(&e),
        }
    }

    fn try_solve(&self, column: Column, epsilon: f64, start: Option<(f64, f64)>) -> Result<Cell> {
        let spec = self.config.spec(epsilon)?;
        let cfg = &self.config.solver;
        let o = self.outcomes;
        let regret = |r: crate::regret::RegretResult| Cell {
            value: Some(r.value),
            status: CellStatus::Converged,
            iterations: r.iterations,
            point: Some((0.0, r.t_star)),
            probability: None,
        };
        match column {
            Column::W => Ok(regret(lower_regret_outcomes(
                &spec,
                o,
                cfg,
                start.map(|s| s.1),
            )?)),
            Column::V => Ok(regret(upper_regret_outcomes(
                &spec,
                o,
                cfg,
                start.map(|s| s.1),
            )?)),
            Column::RLower => {
                let opt = lower_risk_outcomes(&spec, o, cfg, start)?;
                self.risk_cell(&spec, opt, Side::Lower)
            }
            Column::RUpper => {
                let opt = upper_risk_outcomes(&spec, o, cfg, start)?;
                self.risk_cell(&spec, opt, Side::Upper)
            }
        }
    }

    fn risk_cell(&self, spec: &DivergenceSpec, opt: OptimResult, side: Side) -> Result<Cell> {
        let z = worst_case_weights(spec, self.outcomes, &opt, side)?;
        check_normalization(&z, self.outcomes.values(), opt.value)?;
        let probability = self
            .config
            .threshold
            .map(|x| weighted_mass_below(self.sample, &z, x));
        Ok(Cell {
            value: Some(opt.value),
            status: CellStatus::Converged,
            iterations: opt.iterations,
            point: Some((opt.mu, opt.t)),
            probability,
        })
    }
}

/// `E[Z] = 1` and `E[XZ] = value` on the atoms.
pub fn check_normalization(z: &[f64], xs: &[f64], value: f64) -> Result<()> {
    let n = z.len() as f64;
    let mean_z = z.iter().sum::<f64>() / n;
    let mean_xz = z.iter().zip(xs).map(|(z, x)| z * x).sum::<f64>() / n;
    if (mean_z - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization(format!("E[Z] = {mean_z}")));
    }
    if (mean_xz - value).abs() > NORMALIZATION_TOL * value.abs().max(1.0) {
        return Err(Error::Normalization(format!(
            "E[XZ] = {mean_xz}, value = {value}"
        )));
    }
    Ok(())
}

/// Runs the sweep. Per-cell failures are recorded in the row; only invalid
/// configuration and ordering violations among converged cells abort.
pub fn run_sweep(config: &RunConfig) -> Result<SweepReport> {
    config.solver.validate()?;
    config.spec(1.0)?;
    if let Some(x) = config.threshold {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive, got {x}"
            )));
        }
    }
    let params = config.source.resolve()?;
    let sample = quantize(&params, config.dof)?;
    let map = MomentMap::new(config.exponent)?;
    let outcomes = Outcomes::from_payoff(&sample, &map);
    let mean = outcomes.mean();
    let eps = config.grid.points();
    let ctx = Context {
        config,
        sample: &sample,
        outcomes: &outcomes,
    };

    // cells[i] holds the four columns at eps[i]
    let cells: Vec<[Cell; 4]> = if config.warm_start {
        let chains = par::map(config.exec, &COLUMNS, |&col| {
            let mut start = None;
            eps.iter()
                .map(|&e| {
                    let cell = ctx.solve(col, e, start);
                    if cell.point.is_some() {
                        start = cell.point;
                    }
                    cell
                })
                .collect::<Vec<_>>()
        });
        (0..eps.len())
            .map(|i| [chains[0][i], chains[1][i], chains[2][i], chains[3][i]])
            .collect()
    } else {
        par::map(config.exec, &eps, |&e| {
            COLUMNS.map(|col| ctx.solve(col, e, None))
        })
    };

    let rows = eps
        .iter()
        .zip(cells)
        .map(|(&epsilon, [w, rl, ru, v])| {
            let row = SweepRow {
                epsilon,
                w: w.value,
                r_lower: rl.value,
                mean,
                r_upper: ru.value,
                v: v.value,
                p_lower: rl.probability,
                p_upper: ru.probability,
                iterations: Columns {
                    w: w.iterations,
                    r_lower: rl.iterations,
                    r_upper: ru.iterations,
                    v: v.iterations,
                },
                converged: Columns {
                    w: w.status == CellStatus::Converged,
                    r_lower: rl.status == CellStatus::Converged,
                    r_upper: ru.status == CellStatus::Converged,
                    v: v.status == CellStatus::Converged,
                },
                status: Columns {
                    w: w.status,
                    r_lower: rl.status,
                    r_upper: ru.status,
                    v: v.status,
                },
            };
            check_ordering(&row).map(|_| row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepReport {
        metadata: Metadata {
            params,
            divergence: config.divergence,
            alpha: (config.divergence == DivergenceKind::Alpha).then_some(config.alpha),
            exponent: config.exponent,
            dof: config.dof,
            atoms: sample.len(),
            grid: config.grid,
            threshold: config.threshold,
            solver: config.solver,
            warm_start: config.warm_start,
            units: config.units.clone(),
            timestamp: None,
        },
        rows,
    })
}

/// `W <= R_ <= E[X] <= R̄ <= V` over the converged cells of a row.
pub fn check_ordering(row: &SweepRow) -> Result<()> {
    let chain = [
        ("W", row.w),
        ("R_lower", row.r_lower),
        ("mean", Some(row.mean)),
        ("R_upper", row.r_upper),
        ("V", row.v),
    ];
    let present: Vec<(&str, f64)> = chain
        .iter()
        .filter_map(|&(name, v)| v.map(|v| (name, v)))
        .collect();
    for pair in present.windows(2) {
        let ((a, x), (b, y)) = (pair[0], pair[1]);
        if x > y + ORDERING_SLACK {
            return Err(Error::OrderingViolation(format!(
                "at epsilon = {}: {a} = {x} exceeds {b} = {y}",
                row.epsilon
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "epsilon,W,R_lower,mean,R_upper,V,P_lower,P_upper";

/// Twelve significant digits in scientific notation.
pub struct Sci(pub f64);

impl fmt::Display for Sci {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.11e}", self.0)
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| Sci(x).to_string()).unwrap_or_default()
}

pub fn emit<W: Write>(report: &SweepReport, format: OutputFormat, mut out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    Sci(r.epsilon),
                    cell(r.w),
                    cell(r.r_lower),
                    Sci(r.mean),
                    cell(r.r_upper),
                    cell(r.v),
                    cell(r.p_lower),
                    cell(r.p_upper)
                )?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        let mut c = RunConfig::new(ParamSource::Explicit(
            GammaParams::new(4.60, 0.142).unwrap(),
        ));
        c.dof = 8;
        c.grid = EpsGrid::new(-3.0, -1.0, 5).unwrap();
        c.threshold = Some(1.0);
        c
    }

    #[test]
    fn default_grid_endpoints() {
        let pts = EpsGrid::default().points();
        assert_eq!(pts.len(), 801);
        assert_eq!(pts[0], 1e-5);
        assert_eq!(pts[800], 10f64.powf(-0.2));
        assert!((pts[400] - 10f64.powf(-5.0 + 6.0 * 400.0 / 1000.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_parsing() {
        let g: EpsGrid = "-9,-9,1".parse().unwrap();
        assert_eq!(g.points(), vec![1e-9]);
        assert!("1,0,5".parse::<EpsGrid>().is_err());
        assert!("0,1,0".parse::<EpsGrid>().is_err());
        assert!("0,1".parse::<EpsGrid>().is_err());
    }

    #[test]
    fn warm_and_cold_sweeps_agree() {
        let warm = run_sweep(&small_config()).unwrap();
        let mut cold_cfg = small_config();
        cold_cfg.warm_start = false;
        let cold = run_sweep(&cold_cfg).unwrap();
        assert_eq!(warm.health(), SweepHealth::Ok);
        for (a, b) in warm.rows.iter().zip(&cold.rows) {
            for (x, y) in [
                (a.w, b.w),
                (a.r_lower, b.r_lower),
                (a.r_upper, b.r_upper),
                (a.v, b.v),
            ] {
                assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
            }
            assert!(a.p_upper.unwrap() <= a.p_lower.unwrap());
        }
    }

    #[test]
    fn sequential_and_parallel_are_identical() {
        let mut c = small_config();
        c.warm_start = false;
        c.exec = ExecMode::Sequential;
        let seq = run_sweep(&c).unwrap();
        c.exec = ExecMode::Parallel;
        assert_eq!(seq, run_sweep(&c).unwrap());
    }

    #[test]
    fn half_alpha_upper_is_infeasible_everywhere() {
        let mut c = small_config();
        c.divergence = DivergenceKind::Alpha;
        c.alpha = 0.5;
        let r = run_sweep(&c).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.status.r_upper == CellStatus::Infeasible
                && row.status.v == CellStatus::Infeasible
                && row.r_upper.is_none()
                && row.r_lower.is_some()));
        assert_eq!(r.health(), SweepHealth::InfeasibleColumn);
    }

    #[test]
    fn csv_layout() {
        let mut c = small_config();
        c.divergence = DivergenceKind::Alpha;
        c.alpha = 0.5;
        c.grid = EpsGrid::new(-2.0, -2.0, 1).unwrap();
        let r = run_sweep(&c).unwrap();
        let mut buf = Vec::new();
        emit(&r, OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "1.00000000000e-2");
        assert!(fields[4].is_empty() && fields[5].is_empty() && fields[7].is_empty());
        assert!(!fields[1].is_empty() && !fields[6].is_empty());
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut r = run_sweep(&small_config()).unwrap();
        r.rows.clear();
        let mut buf = Vec::new();
        emit(&r, OutputFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = run_sweep(&small_config()).unwrap();
        let mut buf = Vec::new();
        emit(&r, OutputFormat::Json, &mut buf).unwrap();
        let back: SweepReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn ordering_violation_is_reported() {
        let mut row = run_sweep(&small_config()).unwrap().rows[0].clone();
        row.r_upper = Some(row.mean - 1e-3);
        assert!(matches!(
            check_ordering(&row),
            Err(Error::OrderingViolation(_))
        ));
    }
}
