//! Statistical divergences and their convex conjugates.
//!
//! Two families are supported: Kullback–Leibler, `f(x) = x ln x - x + 1`, and
//! the α-divergence, `f(x) = (x^α - αx + α - 1)/(α - 1)`. Their conjugates are
//!
//! ```text
//! KL:  g(y) = e^y - 1
//! α:   g(y) = (1 + ((α-1)/α) y)_+^{α/(α-1)} - 1
//! ```
//!
//! For α ∈ (0,1) the conjugate is finite only below `α/(1-α)`; at and above
//! that point it is `+∞`. Divergences are extended by `f(x) = +∞` for `x < 0`.
//!
//! The uncertainty-aversion level ε rescales the pair as `f_ε = f/ε` and
//! `g_ε(y) = g(εy)/ε`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedValue {
    Finite(f64),
    PositiveInfinity,
}

impl ExtendedValue {
    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtendedValue::PositiveInfinity
        } else {
            ExtendedValue::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedValue::Finite(x) => Some(x),
            ExtendedValue::PositiveInfinity => None,
        }
    }

    /// Collapses to `f64`, mapping `PositiveInfinity` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedValue::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), PositiveInfinity) => Some(Ordering::Less),
            (PositiveInfinity, Finite(_)) => Some(Ordering::Greater),
            (PositiveInfinity, PositiveInfinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(x) => write!(f, "{x}"),
            ExtendedValue::PositiveInfinity => f.write_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    KullbackLeibler,
    Alpha,
}

/// Divergence family, its α parameter and the uncertainty-aversion level ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    alpha: f64,
    epsilon: f64,
}

impl DivergenceSpec {
    /// Validating constructor. `alpha` is ignored for Kullback–Leibler.
    pub fn new(kind: DivergenceKind, alpha: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        let alpha = match kind {
            DivergenceKind::KullbackLeibler => 1.0,
            DivergenceKind::Alpha => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must be positive and finite, got {alpha}"
                    )));
                }
                if alpha == 1.0 {
                    return Err(Error::InvalidParameter(
                        "alpha = 1 is the Kullback-Leibler divergence; use that kind instead"
                            .into(),
                    ));
                }
                alpha
            }
        };
        Ok(DivergenceSpec {
            kind,
            alpha,
            epsilon,
        })
    }

    pub fn kl(epsilon: f64) -> Result<Self> {
        Self::new(DivergenceKind::KullbackLeibler, 1.0, epsilon)
    }

    pub fn alpha(alpha: f64, epsilon: f64) -> Result<Self> {
        Self::new(DivergenceKind::Alpha, alpha, epsilon)
    }

    /// Maps `α = 1` to Kullback–Leibler, anything else to the α family.
    pub fn from_alpha(alpha: f64, epsilon: f64) -> Result<Self> {
        if alpha == 1.0 {
            Self::kl(epsilon)
        } else {
            Self::alpha(alpha, epsilon)
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.kind, self.alpha, epsilon)
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    /// α for the α family, 1 for Kullback–Leibler.
    pub fn alpha_value(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// True for the α family with α ∈ (0,1), where the conjugate blows up.
    pub fn has_bounded_conjugate_domain(&self) -> bool {
        self.kind == DivergenceKind::Alpha && self.alpha < 1.0
    }

    /// Supremum of the finite domain of the unscaled conjugate `g`.
    pub fn conjugate_domain_bound(&self) -> f64 {
        if self.has_bounded_conjugate_domain() {
            self.alpha / (1.0 - self.alpha)
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn conjugate(&self) -> Conjugate {
        Conjugate::new(self)
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::KullbackLeibler => write!(f, "KL(eps={})", self.epsilon),
            DivergenceKind::Alpha => write!(f, "alpha={}(eps={})", self.alpha, self.epsilon),
        }
    }
}

/// Unscaled divergence `f(x)`.
pub fn f_value(spec: &DivergenceSpec, x: f64) -> ExtendedValue {
    if x < 0.0 || x.is_nan() {
        return ExtendedValue::PositiveInfinity;
    }
    if x == f64::INFINITY {
        return ExtendedValue::PositiveInfinity;
    }
    let v = match spec.kind {
        DivergenceKind::KullbackLeibler => {
            if x == 0.0 {
                1.0
            } else if x == 1.0 {
                0.0
            } else {
                x * x.ln() - x + 1.0
            }
        }
        DivergenceKind::Alpha => {
            let a = spec.alpha;
            if x == 1.0 {
                0.0
            } else {
                (x.powf(a) - a * x + a - 1.0) / (a - 1.0)
            }
        }
    };
    ExtendedValue::Finite(v)
}

/// Unscaled conjugate `g(y)`.
pub fn g_value(spec: &DivergenceSpec, y: f64) -> ExtendedValue {
    ExtendedValue::from_f64(spec.conjugate().value(y))
}

/// Scaled conjugate `g_ε(y) = g(εy)/ε`.
pub fn g_eps_value(spec: &DivergenceSpec, y: f64) -> ExtendedValue {
    let eps = spec.epsilon;
    if eps == 1.0 {
        return g_value(spec, y);
    }
    match g_value(spec, eps * y) {
        ExtendedValue::Finite(v) => ExtendedValue::Finite(v / eps),
        inf => inf,
    }
}

/// Derivative `g'(y)`; zero on the flat region of the α > 1 plus-part.
pub fn g_prime(spec: &DivergenceSpec, y: f64) -> Result<f64> {
    spec.conjugate()
        .terms(y)
        .map(|t| t.d1)
        .ok_or(Error::DomainViolation(y))
}

/// Inverse of `f'_ε`: the worst-case likelihood ratio as a function of the
/// scaled centred payoff.
pub fn h_eps(spec: &DivergenceSpec, y: f64) -> f64 {
    let ey = spec.epsilon * y;
    match spec.kind {
        DivergenceKind::KullbackLeibler => ey.exp(),
        DivergenceKind::Alpha => {
            let a = spec.alpha;
            let base = 1.0 + (a - 1.0) / a * ey;
            if base <= 0.0 {
                // α > 1: plus-part is zero. α < 1: outside the feasible region,
                // where the power would blow up; callers check feasibility.
                if a > 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                base.powf(1.0 / (a - 1.0))
            }
        }
    }
}

/// Conjugate evaluated at one point: value, first and second derivatives and
/// `g(y) - y g'(y)`, the latter computed without catastrophic cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Terms {
    pub g: f64,
    pub d1: f64,
    pub d2: f64,
    pub g_minus_y_d1: f64,
}

/// Precomputed evaluator for `g` and its derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Conjugate {
    Kl,
    Alpha {
        alpha: f64,
        /// (α-1)/α
        c: f64,
        /// 1/(α-1), exponent of g'
        p: f64,
    },
}

impl Conjugate {
    fn new(spec: &DivergenceSpec) -> Self {
        match spec.kind {
            DivergenceKind::KullbackLeibler => Conjugate::Kl,
            DivergenceKind::Alpha => {
                let a = spec.alpha;
                Conjugate::Alpha {
                    alpha: a,
                    c: (a - 1.0) / a,
                    p: 1.0 / (a - 1.0),
                }
            }
        }
    }

    /// `g(y)`, with `f64::INFINITY` outside the finite domain.
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            Conjugate::Kl => y.exp_m1(),
            Conjugate::Alpha { alpha, c, p } => {
                let z = 1.0 + c * y;
                if z <= 0.0 {
                    if alpha > 1.0 {
                        -1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    ((p + 1.0) * (c * y).ln_1p()).exp_m1()
                }
            }
        }
    }

    /// All terms at `y`, or `None` where `g(y) = +∞`.
    #[inline]
    pub fn terms(&self, y: f64) -> Option<Terms> {
        match *self {
            Conjugate::Kl => {
                let e = y.exp();
                if !e.is_finite() {
                    return None;
                }
                Some(Terms {
                    g: y.exp_m1(),
                    d1: e,
                    d2: e,
                    // e^y - 1 - y e^y = -e^y (e^{-y} - 1 + y)
                    g_minus_y_d1: -e * ((-y).exp_m1() + y),
                })
            }
            Conjugate::Alpha { alpha, c, p } => {
                let z = 1.0 + c * y;
                if z <= 0.0 {
                    if alpha > 1.0 {
                        return Some(Terms {
                            g: -1.0,
                            d1: 0.0,
                            d2: 0.0,
                            g_minus_y_d1: -1.0,
                        });
                    }
                    return None;
                }
                let lz = (c * y).ln_1p();
                let d1 = (p * lz).exp();
                if !d1.is_finite() {
                    return None;
                }
                let g = ((p + 1.0) * lz).exp_m1();
                // g - y g' = (1 - y/α) g' - 1
                let w = 1.0 - y / alpha;
                let g_minus_y_d1 = if w > 0.0 {
                    (p * lz + (-y / alpha).ln_1p()).exp_m1()
                } else {
                    w * d1 - 1.0
                };
                Some(Terms {
                    g,
                    d1,
                    d2: d1 / (alpha * z),
                    g_minus_y_d1,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kl() -> DivergenceSpec {
        DivergenceSpec::kl(1.0).unwrap()
    }

    fn alpha(a: f64) -> DivergenceSpec {
        DivergenceSpec::alpha(a, 1.0).unwrap()
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_value(&kl(), 1.0), ExtendedValue::Finite(0.0));
        assert_eq!(f_value(&kl(), 0.0), ExtendedValue::Finite(1.0));
        assert_relative_eq!(
            f_value(&kl(), 2.0).to_f64(),
            2.0 * 2f64.ln() - 1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(f_value(&kl(), 2.0).to_f64(), 0.386294, epsilon = 1e-6);
        for s in [kl(), alpha(0.5), alpha(1.5)] {
            assert_eq!(f_value(&s, -0.5), ExtendedValue::PositiveInfinity);
            assert_eq!(f_value(&s, 1.0), ExtendedValue::Finite(0.0));
        }
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_value(&alpha(1.5), -3.0), ExtendedValue::Finite(-1.0));
        assert_eq!(g_value(&alpha(1.5), -7.0), ExtendedValue::Finite(-1.0));
        assert_eq!(g_value(&kl(), 0.0), ExtendedValue::Finite(0.0));
        assert_relative_eq!(g_value(&alpha(0.5), 0.5).to_f64(), 1.0, epsilon = 1e-14);
        assert_eq!(g_value(&alpha(0.5), 1.0), ExtendedValue::PositiveInfinity);
        assert_eq!(g_value(&alpha(0.5), 3.0), ExtendedValue::PositiveInfinity);
    }

    #[test]
    fn g_eps_examples() {
        let s = DivergenceSpec::kl(2.0).unwrap();
        assert_eq!(g_eps_value(&s, 0.0), ExtendedValue::Finite(0.0));
        let s = DivergenceSpec::alpha(0.5, 0.5).unwrap();
        assert_eq!(g_eps_value(&s, 2.0), ExtendedValue::PositiveInfinity);
        assert!(g_eps_value(&s, 1.999).is_finite());
        assert_relative_eq!(
            g_eps_value(&kl(), 1.0).to_f64(),
            std::f64::consts::E - 1.0,
            epsilon = 1e-15
        );
        for s in [kl(), alpha(0.5), alpha(1.5), alpha(3.0)] {
            for y in [-2.0, -0.3, 0.0, 0.4, 0.9] {
                assert_eq!(g_eps_value(&s, y), g_value(&s, y));
            }
        }
    }

    #[test]
    fn g_prime_examples() {
        assert_eq!(g_prime(&kl(), 0.0).unwrap(), 1.0);
        assert_eq!(g_prime(&alpha(1.5), 0.0).unwrap(), 1.0);
        assert_eq!(g_prime(&alpha(1.5), -3.0).unwrap(), 0.0);
        assert_eq!(g_prime(&alpha(1.5), -10.0).unwrap(), 0.0);
        assert!(matches!(
            g_prime(&alpha(0.5), 1.0),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn g_prime_matches_finite_differences() {
        for s in [kl(), alpha(0.5), alpha(1.5), alpha(2.5), alpha(0.8)] {
            for y0 in [-2.0, -0.7, -0.1, 0.0, 0.2, 0.6, 1.5] {
                if y0 >= s.conjugate_domain_bound() * 0.9 {
                    continue;
                }
                if s.kind == DivergenceKind::Alpha && s.alpha > 1.0 {
                    let kink = -s.alpha / (s.alpha - 1.0);
                    if (y0 - kink).abs() < 1e-3 {
                        continue;
                    }
                }
                let h = 1e-6 * f64::max(1.0, y0.abs());
                let fd = (g_value(&s, y0 + h).to_f64() - g_value(&s, y0 - h).to_f64()) / (2.0 * h);
                let an = g_prime(&s, y0).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-6 * f64::max(an.abs(), 1e-3),
                    "{s} y={y0}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn second_derivative_and_cancellation_free_term() {
        for s in [kl(), alpha(0.5), alpha(1.5), alpha(2.5)] {
            let conj = s.conjugate();
            for y in [-1.2, -0.05, 1e-4, 0.3] {
                let t = conj.terms(y).unwrap();
                let h = 1e-5;
                let fd =
                    (conj.terms(y + h).unwrap().d1 - conj.terms(y - h).unwrap().d1) / (2.0 * h);
                assert_relative_eq!(t.d2, fd, max_relative = 1e-7);
                assert_relative_eq!(t.g_minus_y_d1, t.g - y * t.d1, epsilon = 1e-14);
            }
            // small-argument accuracy: g(y) - y g'(y) ≈ -y² g''(0)/2
            let y = 1e-7;
            let t = conj.terms(y).unwrap();
            assert_relative_eq!(
                t.g_minus_y_d1,
                -y * y / (2.0 * s.alpha),
                max_relative = 1e-5
            );
        }
    }

    #[test]
    fn h_eps_examples() {
        assert_eq!(h_eps(&kl(), 0.0), 1.0);
        assert_eq!(h_eps(&alpha(1.5), 0.0), 1.0);
        assert_relative_eq!(h_eps(&alpha(1.5), 3.0), 4.0, epsilon = 1e-14);
        assert_eq!(h_eps(&alpha(1.5), -3.5), 0.0);
    }

    #[test]
    fn h_eps_inverts_scaled_derivative() {
        for s in [
            DivergenceSpec::kl(0.3).unwrap(),
            DivergenceSpec::alpha(1.5, 0.3).unwrap(),
            DivergenceSpec::alpha(0.5, 0.3).unwrap(),
        ] {
            for y in [-1.0, -0.2, 0.0, 0.5] {
                let x = h_eps(&s, y);
                assert!(x > 0.0);
                // f'_ε(x) = f'(x)/ε
                let fprime = match s.kind() {
                    DivergenceKind::KullbackLeibler => x.ln(),
                    DivergenceKind::Alpha => {
                        let a = s.alpha_value();
                        a / (a - 1.0) * (x.powf(a - 1.0) - 1.0)
                    }
                };
                assert_relative_eq!(fprime / s.epsilon(), y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(DivergenceSpec::kl(0.0).is_err());
        assert!(DivergenceSpec::kl(-1.0).is_err());
        assert!(DivergenceSpec::alpha(1.0, 0.1).is_err());
        assert!(DivergenceSpec::alpha(0.0, 0.1).is_err());
        assert!(DivergenceSpec::alpha(-2.0, 0.1).is_err());
        assert_eq!(
            DivergenceSpec::from_alpha(1.0, 0.1).unwrap().kind(),
            DivergenceKind::KullbackLeibler
        );
    }

    #[test]
    fn extended_value_ordering() {
        assert!(ExtendedValue::Finite(1e300) < ExtendedValue::PositiveInfinity);
        assert!(ExtendedValue::Finite(-1.0) < ExtendedValue::Finite(0.0));
    }
}
