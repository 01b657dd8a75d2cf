//! Payoffs and their equally weighted outcomes on a discretized law.

use crate::gamma_dist::{GammaParams, MomentMap};
use crate::quantize::DiscreteSample;

/// A real-valued map `u -> X(u)` on the positive half-line.
///
/// Closures implement this directly and are treated as bounded on the
/// discretized law; moment maps additionally carry the tail information
/// needed to decide whether an optimum can exist for the continuous law.
pub trait Payoff {
    fn value(&self, u: f64) -> f64;

    fn moment_map(&self) -> Option<MomentMap> {
        None
    }
}

impl<F> Payoff for F
where
    F: Fn(f64) -> f64,
{
    fn value(&self, u: f64) -> f64 {
        self(u)
    }
}

impl Payoff for MomentMap {
    fn value(&self, u: f64) -> f64 {
        self.apply(u)
    }

    fn moment_map(&self) -> Option<MomentMap> {
        Some(*self)
    }
}

/// Payoff values on equally weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcomes {
    values: Vec<f64>,
    law: Option<(GammaParams, MomentMap)>,
}

impl Outcomes {
    /// Equally likely outcomes with no underlying continuous law.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "outcomes must not be empty");
        Outcomes { values, law: None }
    }

    pub fn from_payoff<P: Payoff + ?Sized>(sample: &DiscreteSample, payoff: &P) -> Self {
        let values = sample.atoms().iter().map(|&u| payoff.value(u)).collect();
        Outcomes {
            values,
            law: payoff.moment_map().map(|m| (*sample.source(), m)),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The gamma law and moment map these outcomes discretize, if known.
    pub fn law(&self) -> Option<(GammaParams, MomentMap)> {
        self.law
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every outcome equal: the payoff is a constant.
    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    pub(crate) fn negated(&self) -> Outcomes {
        Outcomes {
            values: self.values.iter().map(|v| -v).collect(),
            law: None,
        }
    }

    pub(crate) fn abs(&self) -> Outcomes {
        Outcomes {
            values: self.values.iter().map(|v| v.abs()).collect(),
            law: None,
        }
    }
}
