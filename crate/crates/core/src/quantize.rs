//! Quantile discretization of a gamma law.
//!
//! The continuous law is replaced by `N = 2^m` equally weighted atoms placed at
//! the odd quantiles `(2i - 1)/(2N)`, `i = 1..N`. Each atom sits at the
//! probability midpoint of a cell of mass `1/N`, so the step CDF of the atoms
//! stays within `1/N` of the true CDF everywhere.

use crate::divergence::ExtendedValue;
use crate::error::{Error, Result};
use crate::gamma_dist::{gamma_cdf, gamma_quantile, GammaParams};

/// Degrees-of-freedom exponent used throughout the application (N = 8192).
pub const DEFAULT_DOF_EXPONENT: u32 = 13;

/// Largest supported exponent; keeps `2^m` comfortably in memory.
pub const MAX_DOF_EXPONENT: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSample {
    atoms: Vec<f64>,
    m: u32,
    source: GammaParams,
}

impl DiscreteSample {
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dof_exponent(&self) -> u32 {
        self.m
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    pub fn source(&self) -> &GammaParams {
        &self.source
    }

    /// Step CDF `F_N(x)`: fraction of atoms at or below `x`.
    pub fn step_cdf(&self, x: f64) -> f64 {
        self.atoms.partition_point(|&a| a <= x) as f64 / self.atoms.len() as f64
    }
}

/// Builds the `2^m`-atom discretization of `params`.
pub fn quantize(params: &GammaParams, m: u32) -> Result<DiscreteSample> {
    if m == 0 || m > MAX_DOF_EXPONENT {
        return Err(Error::InvalidParameter(format!(
            "dof exponent must lie in 1..={MAX_DOF_EXPONENT}, got {m}"
        )));
    }
    let n = 1usize << m;
    let two_n = 2.0 * n as f64;
    let atoms = (1..=n)
        .map(|i| gamma_quantile(params, (2 * i - 1) as f64 / two_n))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteSample {
        atoms,
        m,
        source: *params,
    })
}

/// `N⁻¹ Σ fn(atom)`; `+∞` as soon as any term is `+∞`.
pub fn expect<F>(sample: &DiscreteSample, f: F) -> ExtendedValue
where
    F: Fn(f64) -> f64,
{
    let mut sum = 0.0;
    for &u in &sample.atoms {
        let v = f(u);
        if v == f64::INFINITY {
            return ExtendedValue::PositiveInfinity;
        }
        sum += v;
    }
    ExtendedValue::Finite(sum / sample.atoms.len() as f64)
}

/// Largest observed `|F(x) - F_N(x)|` over a grid made of the atoms, points
/// 1e-9 either side of each atom, the midpoints between atoms, and `10N`
/// uniform points on `[0, F⁻¹(1 - 1/(4N))]`.
pub fn discretization_sup_error(sample: &DiscreteSample) -> f64 {
    let params = sample.source;
    let atoms = &sample.atoms;
    let n = atoms.len();
    let mut worst = 0.0_f64;
    let mut probe = |x: f64| {
        if x >= 0.0 {
            let err = (gamma_cdf(&params, x) - sample.step_cdf(x)).abs();
            worst = worst.max(err);
        }
    };
    for (i, &a) in atoms.iter().enumerate() {
        probe(a);
        probe(a - 1e-9);
        probe(a + 1e-9);
        if i + 1 < n {
            probe(0.5 * (a + atoms[i + 1]));
        }
    }
    let top = gamma_quantile(&params, 1.0 - 1.0 / (4.0 * n as f64)).unwrap_or(atoms[n - 1]);
    let count = 10 * n;
    for k in 0..=count {
        probe(top * k as f64 / count as f64);
    }
    worst
}
