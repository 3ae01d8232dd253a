//! Plug-in estimation of threshold rules from a learning sample.

mod ecdf;
mod rule;
mod sample;
mod standardize;
mod transform;

pub use ecdf::EmpiricalDistribution;
pub use rule::{estimate_rule, EstimatedRule, LearningFit, OptimalDesign, RuleSpec};
pub use sample::{relative_frequencies, LabeledSample};
pub use standardize::{standardize, Mode, StandardizationModel};
pub use transform::{cusum_transform, dichotomize_top_quantile, Dichotomy};
