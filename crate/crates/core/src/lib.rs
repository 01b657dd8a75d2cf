//! Consistent lower and upper bounds on expectations under model uncertainty.
//!
//! A gamma law is discretized into `2^m` equally weighted atoms; paired
//! Orlicz regrets and divergence risk measures are then minimized over the
//! discretized law to bracket `E[X]` for a payoff `X` of the uncertain
//! quantity. The crate also ships the `orlicz` command-line tool.

pub mod cli;
pub mod descent;
pub mod divergence;
pub mod error;
pub mod gamma_dist;
pub mod ingest;
pub mod outcomes;
pub mod par;
pub mod quantize;
pub mod regret;
pub mod risk;
pub mod sweep;

pub use descent::{Method, SolverConfig};
pub use divergence::{DivergenceKind, DivergenceSpec, ExtendedValue};
pub use error::{Error, Result};
pub use gamma_dist::{GammaParams, MomentMap, Side};
pub use outcomes::{Outcomes, Payoff};
pub use quantize::{quantize, DiscreteSample};
pub use regret::{lower_regret, upper_regret, RegretResult};
pub use risk::{lower_risk, upper_risk, OptimResult};
