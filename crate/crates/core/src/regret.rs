//! Upper and lower Orlicz regrets, and the Amemiya / Luxemburg norms.
//!
//! With the substitution `t -> εt` the regrets become one-dimensional problems
//! in `t`:
//!
//! ```text
//! V(X) = inf_{t>0}  t (ε + E[g(X/t)])
//! W(X) = sup_{t>0} -t (ε + E[g(-X/t)]) = -V(-X)
//! ```
//!
//! which is the risk objective with `μ` frozen at 0. The reported `t_star` is
//! in these substituted coordinates.

use crate::descent::{minimize, Objective, SolverConfig};
use crate::divergence::{g_value, DivergenceSpec, ExtendedValue};
use crate::error::{Error, Result};
use crate::gamma_dist::{check_existence, Side};
use crate::outcomes::{Outcomes, Payoff};
use crate::quantize::DiscreteSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretResult {
    pub value: f64,
    pub t_star: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Fails when the continuous law behind `outcomes` admits no finite bound.
pub(crate) fn ensure_exists(spec: &DivergenceSpec, outcomes: &Outcomes, side: Side) -> Result<()> {
    if let Some((params, map)) = outcomes.law() {
        let verdict = check_existence(spec, &map, &params, side);
        if verdict.is_infeasible() {
            return Err(Error::Infeasible(verdict.reason));
        }
    }
    Ok(())
}

fn solve_upper(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start_t: f64,
) -> Result<RegretResult> {
    if outcomes.values().iter().all(|&v| v == 0.0) {
        return Ok(RegretResult {
            value: 0.0,
            t_star: config.t_min,
            converged: true,
            iterations: 0,
        });
    }
    let objective = Objective::new(spec, outcomes.values());
    let sol = minimize(&objective, config, (0.0, start_t), true)?;
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            mu: 0.0,
            t: sol.t,
        });
    }
    Ok(RegretResult {
        value: sol.value,
        t_star: sol.t,
        converged: true,
        iterations: sol.iterations,
    })
}

/// `V` on precomputed outcomes, starting the search from `start_t`.
pub fn upper_regret_outcomes(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start_t: Option<f64>,
) -> Result<RegretResult> {
    ensure_exists(spec, outcomes, Side::Upper)?;
    solve_upper(spec, outcomes, config, start_t.unwrap_or(config.init_t))
}

/// `W` on precomputed outcomes, starting the search from `start_t`.
pub fn lower_regret_outcomes(
    spec: &DivergenceSpec,
    outcomes: &Outcomes,
    config: &SolverConfig,
    start_t: Option<f64>,
) -> Result<RegretResult> {
    ensure_exists(spec, outcomes, Side::Lower)?;
    let r = solve_upper(
        spec,
        &outcomes.negated(),
        config,
        start_t.unwrap_or(config.init_t),
    )?;
    Ok(RegretResult {
        value: -r.value,
        ..r
    })
}

/// Upper Orlicz regret `V_{g_ε}(X)`.
pub fn upper_regret<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<RegretResult> {
    upper_regret_outcomes(
        spec,
        &Outcomes::from_payoff(sample, payoff),
        &SolverConfig::default(),
        None,
    )
}

/// Lower Orlicz regret `W_{g_ε}(X)`.
pub fn lower_regret<P: Payoff + ?Sized>(
    spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<RegretResult> {
    lower_regret_outcomes(
        spec,
        &Outcomes::from_payoff(sample, payoff),
        &SolverConfig::default(),
        None,
    )
}

/// Young function `ḡ(y)`: zero for `y < 0`, `g(y)` otherwise.
fn young(spec: &DivergenceSpec, y: f64) -> f64 {
    if y < 0.0 {
        0.0
    } else {
        g_value(spec, y).to_f64()
    }
}

/// `E[ḡ(|X|/λ)]`.
fn young_modular(spec: &DivergenceSpec, abs_values: &[f64], lambda: f64) -> f64 {
    let mut sum = 0.0;
    for &x in abs_values {
        let v = young(spec, x / lambda);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        sum += v;
    }
    sum / abs_values.len() as f64
}

/// Amemiya norm `inf_t t (1 + E[ḡ(|X|/t)])` on precomputed outcomes.
///
/// Minimized by golden-section search in `ln t`, independently of the
/// regret kernel. Only the divergence family of `young` matters; ε is ignored.
pub fn amemiya_norm_outcomes(young_spec: &DivergenceSpec, outcomes: &Outcomes) -> Result<f64> {
    let abs = outcomes.abs();
    let xs = abs.values();
    let scale = abs.max();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let phi = |s: f64| {
        let t = s.exp();
        t * (1.0 + young_modular(young_spec, xs, t))
    };
    // ḡ is finite below its domain bound, so t must exceed scale / bound
    let bound = young_spec.conjugate_domain_bound();
    let t_floor = if bound.is_finite() {
        scale / bound * (1.0 + 1e-9)
    } else {
        scale * 1e-6
    };
    let mut lo = t_floor.ln();
    let mut hi = (scale * 1e6).ln();
    // widen until the minimum is interior
    for _ in 0..50 {
        let (p_lo, p_hi) = (phi(lo), phi(hi));
        let inner = phi(lo + 0.01 * (hi - lo));
        if p_hi <= phi(hi - 0.01 * (hi - lo)) {
            hi += 5.0;
        } else if inner >= p_lo && p_lo.is_finite() && !bound.is_finite() {
            lo -= 5.0;
        } else {
            break;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..300 {
        if (hi - lo) < 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = phi(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = phi(d);
        }
    }
    let best = fc.min(fd).min(phi(0.5 * (lo + hi)));
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible(
            "Amemiya objective is infinite for every t".into(),
        ))
    }
}

/// Luxemburg norm `inf { λ > 0 : E[ḡ(|X|/λ)] <= 1 }` on precomputed outcomes,
/// by bisection to relative width 1e-10.
pub fn luxemburg_norm_outcomes(young_spec: &DivergenceSpec, outcomes: &Outcomes) -> Result<f64> {
    let abs = outcomes.abs();
    let xs = abs.values();
    let scale = abs.max();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let modular = |l: f64| young_modular(young_spec, xs, l);
    let mut hi = scale;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Infeasible("Luxemburg bracket diverged".into()));
        }
    }
    let mut lo = hi * 0.5;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
        if lo == 0.0 {
            return Ok(0.0);
        }
    }
    while (hi - lo) > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn amemiya_norm<P: Payoff + ?Sized>(
    young_spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<f64> {
    amemiya_norm_outcomes(young_spec, &Outcomes::from_payoff(sample, payoff))
}

pub fn luxemburg_norm<P: Payoff + ?Sized>(
    young_spec: &DivergenceSpec,
    sample: &DiscreteSample,
    payoff: &P,
) -> Result<f64> {
    luxemburg_norm_outcomes(young_spec, &Outcomes::from_payoff(sample, payoff))
}

/// Young-function value as an extended real, for callers probing ḡ directly.
pub fn young_value(spec: &DivergenceSpec, y: f64) -> ExtendedValue {
    ExtendedValue::from_f64(young(spec, y))
}
