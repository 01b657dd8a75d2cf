//! Upper and lower Orlicz risk measures and their worst-case densities.
//!
//! ```text
//! R̄(X) = inf_{μ, t>0}  μ + t (ε + E[g((X - μ)/t)])
//! R_(X) = sup_{μ, t>0} μ - t (ε + E[g(-(X - μ)/t)]) = -R̄(-X)
//! ```
//!
//! At the optimum the Radon-Nikodym derivative of the worst-case measure is
//! `Z = g'((X - μ)/t)` on the upper side and `Z = g'(-(X - μ)/t)` on the
//! lower side, which equal `h_ε(±(X - μ)/(ε t))`.

use crate::descent::{minimize, Objective, SolverConfig};
use crate::divergence::{f_value, h_eps, DivergenceSpec, ExtendedValue};
use crate::error::{Error, Result};
use crate::gamma_dist::{gamma_pdf, gamma_quantile, Side};
use crate::outcomes::{Outcomes, Payoff};
use crate::quantize::DiscreteSample;
use crate::regret::ensure_exists;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimResult {
    pub mu: f64,
    pub t: f64,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `G(μ, t)` for the discretized payoff.
pub fn risk_objective<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
    mu: f64,
    t: f64,
) -> Result<ExtendedValue> {
    check_t(t)?;
    let outcomes = Outcomes::from_payoff(sample, payoff);
    let objective = Objective::new(spec, outcomes.values());
    Ok(match objective.value(mu, t) {
        Some(v) => ExtendedValue::Finite(v),
        None => ExtendedValue::PositiveInfinity,
    })
}

/// `(∂_μ G, ∂_t G)` for the discretized payoff. Fails where `G = +∞`.
pub fn risk_gradient<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
    mu: f64,
    t: f64,
) -> Result<(f64, f64)> {
    check_t(t)?;
    let outcomes = Outcomes::from_payoff(sample, payoff);
    let objective = Objective::new(spec, outcomes.values());
    let local = objective
        .local(mu, t)
        .ok_or_else(|| Error::DomainViolation((outcomes.max() - mu) / t))?;
    Ok((local.d_mu, local.d_t))
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "t must be positive, got {t}"
        )))
    }
}

/// Upper bound on precomputed outcomes. `start` overrides the configured
/// initial point (used for warm starts along an ε grid).
pub fn upper_risk_outcomes(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start: Option<(f64, f64)>,
) -> Result<OptimResult> {
    ensure_exists(spec, outcomes, Side::Upper)?;
    solve(
        spec,
        outcomes,
        config,
        start.unwrap_or((config.init_mu, config.init_t)),
    )
}

/// Lower bound on precomputed outcomes. `start` is given in the `(μ, t)`
/// coordinates of the lower problem.
pub fn lower_risk_outcomes(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start: Option<(f64, f64)>,
) -> Result<OptimResult> {
    ensure_exists(spec, outcomes, Side::Lower)?;
    let (mu0, t0) = start.unwrap_or((config.init_mu, config.init_t));
    let r = solve(spec, &outcomes.negated(), config, (-mu0, t0))?;
    let result = OptimResult {
        mu: -r.mu,
        value: -r.value,
        ..r
    };
    // the worst-case density must stay finite at every atom: for α < 1 this
    // is (μ - min X)/t below the conjugate domain bound α/(1 - α)
    let bound = spec.conjugate_domain_bound();
    if bound.is_finite() && !outcomes.is_constant() {
        let s = (result.mu - outcomes.min()) / result.t;
        if s >= bound {
            return Err(Error::Infeasible(format!(
                "lower optimum puts (mu - min X)/t = {s} at or beyond the domain bound {bound}"
            )));
        }
    }
    Ok(result)
}

fn solve(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start: (f64, f64),
) -> Result<OptimResult> {
    config.validate()?;
    if outcomes.is_constant() {
        // the infimum over t > 0 is approached as t -> 0 and equals the constant
        let c = outcomes.values()[0];
        return Ok(OptimResult {
            mu: c,
            t: config.t_min,
            value: c,
            converged: true,
            iterations: 0,
        });
    }
    if let Some(r) = saturated(spec, outcomes, config) {
        return Ok(r);
    }
    let objective = Objective::new(spec, outcomes.values());
    let sol = minimize(&objective, config, start, false)?;
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            mu: sol.mu,
            t: sol.t,
        });
    }
    Ok(OptimResult {
        mu: sol.mu,
        t: sol.t,
        value: sol.value,
        converged: true,
        iterations: sol.iterations,
    })
}

/// The conditional law on the largest outcome has divergence
/// `p f(1/p) + (1 - p) f(0)` with `p = P(X = max X)`. Once that fits in the
/// budget the bound is `max X` and the objective only attains it as `t -> 0`,
/// so the minimum is reported at `t_min` with `μ` solving `E[g'((X - μ)/t)] = 1`.
fn saturated(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
) -> Option<OptimResult> {
    let top = outcomes.max();
    let xs = outcomes.values();
    let p = xs.iter().filter(|&&x| x == top).count() as f64 / xs.len() as f64;
    let cost = f_value(spec, 1.0 / p).finite()? * p + f_value(spec, 0.0).finite()? * (1.0 - p);
    if cost > spec.epsilon() {
        return None;
    }
    let t = config.t_min;
    let mass = |mu: f64| {
        xs.iter()
            .map(|&x| h_eps(spec, (x - mu) / t / spec.epsilon()))
            .sum::<f64>()
            / xs.len() as f64
    };
    let (mut lo, mut hi) = (top - t, top);
    while mass(lo) <= 1.0 {
        lo = top - 2.0 * (top - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(OptimResult {
        mu: 0.5 * (lo + hi),
        t,
        value: top,
        converged: true,
        iterations: 0,
    })
}

/// Upper Orlicz risk `R̄_{g_ε}(X)` with the default solver.
pub fn upper_risk<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<OptimResult> {
    upper_risk_outcomes(
        spec,
        &Outcomes::from_payoff(sample, payoff),
        &SolverConfig::default(),
        None,
    )
}

/// Lower Orlicz risk `R_{g_ε}(X)` with the default solver.
pub fn lower_risk<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<OptimResult> {
    lower_risk_outcomes(
        spec,
        &Outcomes::from_payoff(sample, payoff),
        &SolverConfig::default(),
        None,
    )
}

/// Worst-case density ratio `Z` at a single outcome value.
pub fn rn_value(spec: &DivergenceSpec, opt: &OptimResult, side: Side, x: f64) -> Result<f64> {
    let s = match side {
        Side::Upper => (x - opt.mu) / opt.t,
        Side::Lower => -(x - opt.mu) / opt.t,
    };
    let z = h_eps(spec, s / spec.epsilon());
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::DomainViolation(s))
    }
}

/// Atom-level worst-case weights `Z_i`, one per outcome.
pub fn worst_case_weights(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    opt: &OptimResult,
    side: Side,
) -> Result<Vec<f64>> {
    outcomes
        .values()
        .iter()
        .map(|&x| rn_value(spec, opt, side, x))
        .collect()
}

/// Worst-case density evaluated on a plotting grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortedDensity {
    pub grid: Vec<f64>,
    pub base_density: Vec<f64>,
    pub rn_values: Vec<f64>,
    /// `base_density × rn_values`.
    pub product: Vec<f64>,
    /// `E[Z]` over the atoms; 1 at a converged optimum.
    pub mean_z: f64,
    /// `E[XZ]` over the atoms; equals the optimal value.
    pub mean_xz: f64,
}

/// Number of points in the default plotting grid.
pub const PLOT_POINTS: usize = 512;

/// `k q / PLOT_POINTS` for `k = 1..=PLOT_POINTS`, with `q` the 0.9999 quantile.
pub fn default_plot_grid(sample: &DiscreteSample) -> Result<Vec<f64>> {
    let top = gamma_quantile(sample.source(), 0.9999)?;
    Ok((1..=PLOT_POINTS)
        .map(|k| top * k as f64 / PLOT_POINTS as f64)
        .collect())
}

/// Tolerance on `E[Z] = 1` and `E[XZ] = value` (relative for the latter).
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Radon-Nikodym derivative of the worst-case measure at `opt`, checked for
/// normalization on the atoms and tabulated on the default grid.
pub fn rn_derivative<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
    opt: &OptimResult,
    side: Side,
) -> Result<DistortedDensity> {
    let grid = default_plot_grid(sample)?;
    rn_derivative_on(spec, sample, payoff, opt, side, grid)
}

pub fn rn_derivative_on<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
    opt: &OptimResult,
    side: Side,
    grid: Vec<f64>,
) -> Result<DistortedDensity> {
    if !opt.converged {
        return Err(Error::NonConvergence {
            iterations: opt.iterations,
            mu: opt.mu,
            t: opt.t,
        });
    }
    let outcomes = Outcomes::from_payoff(sample, payoff);
    let z = worst_case_weights(spec, &outcomes, opt, side)?;
    let n = z.len() as f64;
    let mean_z = z.iter().sum::<f64>() / n;
    let mean_xz = z
        .iter()
        .zip(outcomes.values())
        .map(|(z, x)| z * x)
        .sum::<f64>()
        / n;
    if (mean_z - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization(format!("E[Z] = {mean_z}, expected 1")));
    }
    if (mean_xz - opt.value).abs() > NORMALIZATION_TOL * opt.value.abs().max(1.0) {
        return Err(Error::Normalization(format!(
            "E[XZ] = {mean_xz}, expected {}",
            opt.value
        )));
    }
    let params = sample.source();
    let base_density: Vec<f64> = grid.iter().map(|&u| gamma_pdf(params, u)).collect();
    let rn_values = grid
        .iter()
        .map(|&u| rn_value(spec, opt, side, payoff.value(u)))
        .collect::<Result<Vec<_>>>()?;
    let product = base_density
        .iter()
        .zip(&rn_values)
        .map(|(p, z)| p * z)
        .collect();
    Ok(DistortedDensity {
        grid,
        base_density,
        rn_values,
        product,
        mean_z,
        mean_xz,
    })
}

/// `E[Z 1(u <= threshold)]` under the given atom weights.
pub fn weighted_mass_below(sample: &DiscreteSample, weights: &[f64], threshold: f64) -> f64 {
    let n = sample.len() as f64;
    sample
        .atoms()
        .iter()
        .zip(weights)
        .filter(|(&u, _)| u <= threshold)
        .map(|(_, z)| z)
        .sum::<f64>()
        / n
}

/// Worst-case probability of `{u <= threshold}` under the bound for the
/// identity payoff on `side`.
pub fn safety_probability(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    threshold: f64,
    side: Side,
) -> Result<f64> {
    let identity = |u: f64| u;
    let outcomes = Outcomes::from_payoff(sample, &identity);
    let config = SolverConfig::default();
    let opt = match side {
        Side::Upper => upper_risk_outcomes(spec, &outcomes, &config, None)?,
        Side::Lower => lower_risk_outcomes(spec, &outcomes, &config, None)?,
    };
    let z = worst_case_weights(spec, &outcomes, &opt, side)?;
    Ok(weighted_mass_below(sample, &z, threshold))
}
