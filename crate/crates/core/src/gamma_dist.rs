//! Gamma law with density `p(u) = u^{a-1} e^{-u/b} / (Γ(a) b^a)`.
//!
//! Special functions are implemented here rather than pulled from a crate:
//! log-gamma via a Lanczos approximation, the regularized incomplete gamma via
//! its power series below `a + 1` and a Lentz continued fraction above.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divergence::{DivergenceKind, DivergenceSpec};
use crate::error::{Error, Result};

/// Shape `a` and scale `b` of a gamma law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    a: f64,
    b: f64,
}

impl GammaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma parameters must be positive and finite, got a = {a}, b = {b}"
            )));
        }
        Ok(GammaParams { a, b })
    }

    pub fn shape(&self) -> f64 {
        self.a
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a * self.b
    }
}

impl fmt::Display for GammaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gamma(a = {}, b = {})", self.a, self.b)
    }
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// The moment `X(u) = u^γ`, γ ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentMap {
    gamma_exponent: f64,
}

impl MomentMap {
    pub fn new(gamma_exponent: f64) -> Result<Self> {
        if gamma_exponent == 0.0 || !gamma_exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "moment exponent must be finite and nonzero, got {gamma_exponent}"
            )));
        }
        Ok(MomentMap { gamma_exponent })
    }

    /// `X(u) = u`.
    pub fn identity() -> Self {
        MomentMap {
            gamma_exponent: 1.0,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.gamma_exponent
    }

    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        if self.gamma_exponent == 1.0 {
            u
        } else {
            u.powf(self.gamma_exponent)
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const INC_GAMMA_EPS: f64 = 1e-15;
const INC_GAMMA_MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..INC_GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * INC_GAMMA_EPS {
                break;
            }
        }
        (sum.ln() + log_prefactor).exp().min(1.0)
    } else {
        // modified Lentz for the continued fraction of Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..INC_GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < INC_GAMMA_EPS {
                break;
            }
        }
        let q = (log_prefactor + h.ln()).exp();
        (1.0 - q).clamp(0.0, 1.0)
    }
}

/// Density at `u > 0`, evaluated in log space.
pub fn gamma_pdf(params: &GammaParams, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let GammaParams { a, b } = *params;
    ((a - 1.0) * u.ln() - u / b - ln_gamma(a) - a * b.ln()).exp()
}

pub fn gamma_cdf(params: &GammaParams, u: f64) -> f64 {
    regularized_lower_gamma(params.a, u / params.b)
}

/// Inverse CDF by bisection on a geometrically grown bracket.
pub fn gamma_quantile(params: &GammaParams, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile level must lie in (0, 1), got {p}"
        )));
    }
    let GammaParams { a, b } = *params;
    let mut lo = 0.0_f64;
    let mut hi = a * b + 10.0 * b * a.sqrt();
    while gamma_cdf(params, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gamma_cdf(params, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // both ends straddle p; keep the closer one
    let (flo, fhi) = (gamma_cdf(params, lo), gamma_cdf(params, hi));
    if lo > 0.0 && (p - flo).abs() < (fhi - p).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

fn sample_mean_variance(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least 2 observations, got {}",
            samples.len()
        )));
    }
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok((mean, var))
}

/// Moment-matching fit: `ab` = sample mean, `ab²` = unbiased sample variance.
pub fn fit_moment_matching(samples: &[f64]) -> Result<GammaParams> {
    let (mean, var) = sample_mean_variance(samples)?;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::DegenerateSample(format!(
            "sample mean must be positive, got {mean}"
        )));
    }
    GammaParams::new(mean * mean / var, var / mean)
}

pub fn theoretical_moments(params: &GammaParams) -> MomentSummary {
    let GammaParams { a, b } = *params;
    MomentSummary {
        mean: a * b,
        variance: a * b * b,
        skewness: 2.0 / a.sqrt(),
        kurtosis: 6.0 / a,
    }
}

/// Sample mean, unbiased variance, and skewness / excess kurtosis from biased
/// central moments.
pub fn empirical_moments(samples: &[f64]) -> Result<MomentSummary> {
    let (mean, variance) = sample_mean_variance(samples)?;
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::DegenerateSample("sample variance is zero".into()));
    }
    let k = samples.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for y in samples {
        let d = y - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= k;
    m3 /= k;
    m4 /= k;
    Ok(MomentSummary {
        mean,
        variance,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Which bound is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    /// Exists only for sufficiently small ε.
    SmallEpsilonOnly,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceVerdict {
    pub feasibility: Feasibility,
    pub reason: String,
}

impl ExistenceVerdict {
    fn new(feasibility: Feasibility, reason: impl Into<String>) -> Self {
        ExistenceVerdict {
            feasibility,
            reason: reason.into(),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.feasibility == Feasibility::Infeasible
    }
}

/// Whether a finite regret / risk can exist for the moment `u^γ` of a gamma law.
pub fn check_existence(
    spec: &DivergenceSpec,
    map: &MomentMap,
    params: &GammaParams,
    side: Side,
) -> ExistenceVerdict {
    let gamma = map.exponent();
    match side {
        Side::Lower => ExistenceVerdict::new(
            Feasibility::Feasible,
            "lower bounds exist for every exponent",
        ),
        Side::Upper => match spec.kind() {
            DivergenceKind::KullbackLeibler => {
                if gamma > 0.0 && gamma <= 1.0 {
                    ExistenceVerdict::new(
                        Feasibility::Feasible,
                        format!("exponent {gamma} lies in (0, 1]"),
                    )
                } else {
                    ExistenceVerdict::new(
                        Feasibility::Infeasible,
                        format!(
                            "the exponential moment of u^{gamma} diverges; KL upper bounds need 0 < gamma <= 1"
                        ),
                    )
                }
            }
            DivergenceKind::Alpha => {
                let alpha = spec.alpha_value();
                if alpha < 1.0 {
                    return ExistenceVerdict::new(
                        Feasibility::Infeasible,
                        format!(
                            "alpha = {alpha} < 1: no minimising pair exists for an unbounded payoff"
                        ),
                    );
                }
                let threshold = -params.shape() * (alpha - 1.0) / alpha;
                if gamma > threshold {
                    ExistenceVerdict::new(
                        Feasibility::Feasible,
                        format!("exponent {gamma} exceeds {threshold}"),
                    )
                } else if gamma == threshold {
                    ExistenceVerdict::new(
                        Feasibility::SmallEpsilonOnly,
                        format!("exponent equals the critical value {threshold}; finite only for small epsilon"),
                    )
                } else {
                    ExistenceVerdict::new(
                        Feasibility::Infeasible,
                        format!("exponent {gamma} is below the critical value {threshold}"),
                    )
                }
            }
        },
    }
}
