//! Covariate-adaptive alarm thresholds.
//!
//! Observations carry a categorical modifier (the class). An observation is
//! flagged when its standardized value exceeds the threshold of its class.
//! The thresholds hold a global false-alarm budget `alpha` while handing
//! rare classes lower cutoffs, and therefore more detection power.
//!
//! * [`rules`]: closed-form threshold rules (proportional, gamma-proportional,
//!   modified, general subprobability class).
//! * [`design`]: optimal designs meeting per-class type II budgets, solved as a
//!   small linear program.
//! * [`estimation`]: relative frequencies, empirical quantiles, residual
//!   standardization and plug-in estimation of the rules.
//! * [`resampling`]: bootstrap standard errors and the smoothed-bootstrap
//!   screening simulation.
//! * [`evaluation`]: alarm rates and per-class contingency tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
mod error;
pub mod estimation;
pub mod evaluation;
pub mod quantile;
pub mod resampling;
pub mod rules;
pub mod serde_ext;
pub mod simplex;

pub use error::{Error, Result};
pub use quantile::{Cdf, QuantileFunction, StandardNormal};
pub use rules::{ClassDistribution, SubProbabilityVector, ThresholdSet};
