//! Optimization kernel for the `(μ, t)` problems.
//!
//! Every regret and risk computation reduces to minimizing
//!
//! ```text
//! G(μ, t) = μ + t (ε + E[g((X - μ)/t)]),   t > 0
//! ```
//!
//! over `(μ, t)` (risk measures) or over `t` with `μ = 0` frozen (regrets).
//! Lower bounds are handled by the callers through `X -> -X`.
//!
//! Two methods share the same objective and stopping rule (both coordinate
//! updates below `tol`):
//!
//! * [`Method::GradientFlow`]: explicit Euler on the gradient flow
//!   `d(μ, t)/dτ = -(∂_μ G, ε⁻¹ ∂_t G)` with a fixed pseudo-time step. A step
//!   landing where `G = +∞` is halved for that iteration only.
//! * [`Method::Newton`]: damped Newton on the jointly convex `G` using the
//!   analytic Hessian, falling back to the Euler step wherever the Hessian is
//!   singular. Steps are halved until `G` does not increase.
//!
//! The flow is unstable once `step · ∂²_μ G > 2`, which happens when the
//! optimal `t` drops below a few tenths; Newton has no such restriction and is
//! the default.

use serde::{Deserialize, Serialize};

use crate::divergence::{Conjugate, DivergenceSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Newton,
    GradientFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Pseudo-time increment of the Euler step.
    pub step: f64,
    /// Stopping threshold on both coordinate updates.
    pub tol: f64,
    pub max_iter: usize,
    pub init_mu: f64,
    pub init_t: f64,
    /// Lower bound enforced on `t` by projection.
    pub t_min: f64,
    /// Scale the `t` component of the flow by `1/ε`.
    pub scale_t_by_inverse_epsilon: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Newton,
            step: 0.5,
            tol: 1e-10,
            max_iter: 1_000_000,
            init_mu: 0.0,
            init_t: 10.0,
            t_min: 1e-8,
            scale_t_by_inverse_epsilon: true,
        }
    }
}

impl SolverConfig {
    pub fn gradient_flow() -> Self {
        SolverConfig {
            method: Method::GradientFlow,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.step.is_finite()
            && self.tol > 0.0
            && self.max_iter > 0
            && self.init_mu.is_finite()
            && self.init_t > 0.0
            && self.init_t.is_finite()
            && self.t_min > 0.0
            && self.t_min < self.init_t;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid solver configuration: {self:?}"
            )))
        }
    }
}

/// Raw output of one kernel run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Solution {
    pub mu: f64,
    pub t: f64,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Objective value, gradient and Hessian at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub value: f64,
    pub d_mu: f64,
    pub d_t: f64,
    pub h_mu_mu: f64,
    pub h_mu_t: f64,
    pub h_t_t: f64,
}

/// `G` over a fixed set of equally weighted outcomes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Objective<'a> {
    conj: Conjugate,
    epsilon: f64,
    xs: &'a [f64],
}

impl<'a> Objective<'a> {
    pub fn new(spec: &DivergenceSpec, xs: &'a [f64]) -> Self {
        Objective {
            conj: spec.conjugate(),
            epsilon: spec.epsilon(),
            xs,
        }
    }

    /// `G(μ, t)`, or `None` where it is `+∞`.
    pub fn value(&self, mu: f64, t: f64) -> Option<f64> {
        let mut sum = 0.0;
        for &x in self.xs {
            let v = self.conj.value((x - mu) / t);
            if v == f64::INFINITY {
                return None;
            }
            sum += v;
        }
        let n = self.xs.len() as f64;
        let g = mu + t * (self.epsilon + sum / n);
        g.is_finite().then_some(g)
    }

    pub fn local(&self, mu: f64, t: f64) -> Option<Local> {
        let (mut sg, mut sd1, mut sq, mut sd2, mut syd2, mut syyd2) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &x in self.xs {
            let y = (x - mu) / t;
            let terms = self.conj.terms(y)?;
            sg += terms.g;
            sd1 += terms.d1;
            sq += terms.g_minus_y_d1;
            sd2 += terms.d2;
            let yd2 = y * terms.d2;
            syd2 += yd2;
            syyd2 += y * yd2;
        }
        let n = self.xs.len() as f64;
        let local = Local {
            value: mu + t * (self.epsilon + sg / n),
            d_mu: 1.0 - sd1 / n,
            // ε + E[g(Y)] - E[Y g'(Y)]
            d_t: self.epsilon + sq / n,
            h_mu_mu: sd2 / (n * t),
            h_mu_t: syd2 / (n * t),
            h_t_t: syyd2 / (n * t),
        };
        (local.value.is_finite() && local.d_mu.is_finite() && local.d_t.is_finite())
            .then_some(local)
    }
}

/// Number of `t` doublings tried when the starting point is outside the domain.
const MAX_RESTART_DOUBLINGS: usize = 60;
/// Smallest step fraction tried in a line search.
const MIN_STEP_FRACTION: f64 = 1e-20;

pub(crate) fn minimize(
    objective: &Objective<'_>,
    config: &SolverConfig,
    start: (f64, f64),
    freeze_mu: bool,
) -> Result<Solution> {
    config.validate()?;
    let (mut mu, mut t) = start;
    if freeze_mu {
        mu = 0.0;
    }
    t = t.max(config.t_min);

    let mut current = None;
    for _ in 0..=MAX_RESTART_DOUBLINGS {
        if let Some(l) = objective.local(mu, t) {
            current = Some(l);
            break;
        }
        t *= 2.0;
    }
    let mut cur = current.ok_or_else(|| {
        Error::Infeasible(format!(
            "objective is infinite at mu = {mu} for every t up to {t}"
        ))
    })?;

    let t_scale = if config.scale_t_by_inverse_epsilon {
        1.0 / objective.epsilon
    } else {
        1.0
    };

    for iter in 0..config.max_iter {
        let (dmu, dt) = direction(&cur, config, t_scale, freeze_mu);
        let nominal_t = (t + dt).max(config.t_min);
        if dmu.abs() < config.tol && (nominal_t - t).abs() < config.tol {
            return Ok(Solution {
                mu,
                t,
                value: cur.value,
                converged: true,
                iterations: iter,
            });
        }

        let noise = 1e-13 * cur.value.abs().max(1.0);
        let mut h = 1.0;
        let accepted = loop {
            let trial_mu = mu + h * dmu;
            let trial_t = (t + h * dt).max(config.t_min);
            if let Some(l) = objective.local(trial_mu, trial_t) {
                let ok = match config.method {
                    Method::GradientFlow => true,
                    Method::Newton => l.value <= cur.value + noise,
                };
                if ok {
                    break Some((trial_mu, trial_t, l));
                }
            }
            h *= 0.5;
            if h < MIN_STEP_FRACTION {
                break None;
            }
        };
        match accepted {
            Some((m, tt, l)) => {
                mu = m;
                t = tt;
                cur = l;
            }
            None => {
                return Ok(Solution {
                    mu,
                    t,
                    value: cur.value,
                    converged: false,
                    iterations: iter,
                })
            }
        }
    }
    Ok(Solution {
        mu,
        t,
        value: cur.value,
        converged: false,
        iterations: config.max_iter,
    })
}

fn direction(cur: &Local, config: &SolverConfig, t_scale: f64, freeze_mu: bool) -> (f64, f64) {
    let euler = || {
        let dmu = if freeze_mu {
            0.0
        } else {
            -config.step * cur.d_mu
        };
        (dmu, -config.step * t_scale * cur.d_t)
    };
    if config.method == Method::GradientFlow {
        return euler();
    }
    if freeze_mu {
        if cur.h_t_t > 0.0 && cur.h_t_t.is_finite() {
            return (0.0, -cur.d_t / cur.h_t_t);
        }
        return euler();
    }
    let (a, b, c) = (cur.h_mu_mu, cur.h_mu_t, cur.h_t_t);
    let det = a * c - b * b;
    if a > 0.0 && c > 0.0 && det > 1e-12 * a * c && det.is_finite() {
        let dmu = -(c * cur.d_mu - b * cur.d_t) / det;
        let dt = -(a * cur.d_t - b * cur.d_mu) / det;
        if dmu.is_finite() && dt.is_finite() {
            return (dmu, dt);
        }
    }
    euler()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let xs = [0.1, 0.4, 0.9, 1.7, 3.2];
        for spec in [
            DivergenceSpec::kl(0.2).unwrap(),
            DivergenceSpec::alpha(1.5, 0.2).unwrap(),
            DivergenceSpec::alpha(0.5, 0.2).unwrap(),
        ] {
            let obj = Objective::new(&spec, &xs);
            let (mu, t) = (0.3, 7.0);
            let l = obj.local(mu, t).unwrap();
            let h = 1e-6;
            let fd_mu = (obj.value(mu + h, t).unwrap() - obj.value(mu - h, t).unwrap()) / (2.0 * h);
            let fd_t = (obj.value(mu, t + h).unwrap() - obj.value(mu, t - h).unwrap()) / (2.0 * h);
            assert!((fd_mu - l.d_mu).abs() < 1e-7, "{spec}");
            assert!((fd_t - l.d_t).abs() < 1e-7, "{spec}");
            let l2 = obj.local(mu + h, t).unwrap();
            let l1 = obj.local(mu - h, t).unwrap();
            assert!(((l2.d_mu - l1.d_mu) / (2.0 * h) - l.h_mu_mu).abs() < 1e-6);
            assert!(((l2.d_t - l1.d_t) / (2.0 * h) - l.h_mu_t).abs() < 1e-6);
            let l2 = obj.local(mu, t + h).unwrap();
            let l1 = obj.local(mu, t - h).unwrap();
            assert!(((l2.d_t - l1.d_t) / (2.0 * h) - l.h_t_t).abs() < 1e-6);
        }
    }

    #[test]
    fn both_methods_reach_the_same_fixed_point() {
        let xs: Vec<f64> = (1..=64).map(|i| (i as f64 / 65.0).powi(2) * 3.0).collect();
        let spec = DivergenceSpec::kl(0.05).unwrap();
        let obj = Objective::new(&spec, &xs);
        let newton = minimize(&obj, &SolverConfig::default(), (0.0, 10.0), false).unwrap();
        let flow = minimize(&obj, &SolverConfig::gradient_flow(), (0.0, 10.0), false).unwrap();
        assert!(newton.converged && flow.converged);
        assert!(newton.iterations < flow.iterations);
        assert!((newton.mu - flow.mu).abs() < 1e-7);
        assert!((newton.t - flow.t).abs() < 1e-6);
        assert!((newton.value - flow.value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_start_is_restarted_by_doubling_t() {
        // α = 0.5: g((x - 0)/t) is infinite while x/t ≥ 1
        let xs = [5.0, 50.0];
        let spec = DivergenceSpec::alpha(0.5, 0.1).unwrap();
        let obj = Objective::new(&spec, &xs);
        assert!(obj.value(0.0, 10.0).is_none());
        let sol = minimize(&obj, &SolverConfig::default(), (0.0, 10.0), false).unwrap();
        assert!(sol.converged);
    }

    #[test]
    fn rejects_invalid_config() {
        let xs = [1.0];
        let spec = DivergenceSpec::kl(0.1).unwrap();
        let obj = Objective::new(&spec, &xs);
        let bad = SolverConfig {
            step: -1.0,
            ..SolverConfig::default()
        };
        assert!(minimize(&obj, &bad, (0.0, 10.0), false).is_err());
    }
}
