use serde::{Deserialize, Serialize};

use super::ecdf::EmpiricalDistribution;
use super::sample::{relative_frequencies, LabeledSample};
use super::standardize::{standardize, Mode, StandardizationModel};
use crate::design::{build_lp, solve_minority_greedy, AlternativeSpec, DesignTargets, LpInstance};
use crate::error::{Error, Result};
use crate::rules::{
    constant_thresholds, gamma_proportional_thresholds, modified_thresholds,
    thresholds_from_subprobability, ClassDistribution, ScoreWeights, SubProbabilityVector,
    ThresholdSet,
};

/// Which threshold rule to estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    Proportional,
    Gamma {
        gamma: f64,
    },
    Modified {
        k0: usize,
        p_min: f64,
        #[serde(default)]
        p_max: Option<f64>,
    },
    Subprobability {
        g: Vec<f64>,
    },
    Constant,
    /// LP design for an alternative. `c_star` overrides the cutoffs that
    /// would otherwise be computed from the estimated quantile function.
    Optimal {
        alternative: AlternativeSpec,
        #[serde(default)]
        c_star: Option<Vec<f64>>,
    },
}

/// Design details kept alongside an estimated optimal rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalDesign {
    pub c_star: Vec<f64>,
    pub lp: LpInstance,
    pub g: SubProbabilityVector,
}

/// Standardized learning sample ready for plug-in estimation.
#[derive(Debug, Clone)]
pub struct LearningFit {
    pub dist: ClassDistribution,
    pub residuals: Vec<f64>,
    pub model: StandardizationModel,
    /// Pooled residual distribution, the plug-in estimate of `Psi`.
    pub psi: EmpiricalDistribution,
}

impl LearningFit {
    pub fn new(sample: &LabeledSample, mode: Mode, tau: f64) -> Result<Self> {
        let dist = relative_frequencies(sample)?;
        let (residuals, model) = standardize(sample, mode, tau)?;
        let psi = EmpiricalDistribution::new(residuals.clone())?;
        Ok(Self {
            dist,
            residuals,
            model,
            psi,
        })
    }

    /// Cutoffs `c*` for an alternative under the estimated `Psi`.
    pub fn design_targets(&self, alt: &AlternativeSpec) -> Result<DesignTargets> {
        alt.validate(self.dist.len())?;
        DesignTargets::from_alternative(alt, &self.psi)
    }

    /// Design targets for an alternative, with `c_star` replacing the LP cutoffs when given.
    pub fn resolve_targets(&self, alt: &AlternativeSpec, c_star: Option<&[f64]>) -> Result<DesignTargets> {
        let mut targets = self.design_targets(alt)?;
        if let Some(c) = c_star {
            if c.len() != self.dist.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.dist.len(),
                    got: c.len(),
                });
            }
            if targets.per_class.is_some() {
                targets.per_class = Some(c.to_vec());
            } else {
                targets.marginal = Some(c.to_vec());
            }
        }
        Ok(targets)
    }

    pub fn estimate(&self, rule: &RuleSpec, alpha: f64) -> Result<EstimatedRule> {
        let dist = &self.dist;
        let psi = &self.psi;
        let mut design = None;
        let mut thresholds = match rule {
            RuleSpec::Proportional => gamma_proportional_thresholds(dist, 1.0, alpha, psi)?,
            RuleSpec::Gamma { gamma } => gamma_proportional_thresholds(dist, *gamma, alpha, psi)?,
            RuleSpec::Modified { k0, p_min, p_max } => {
                let weights = match p_max {
                    Some(p_max) => ScoreWeights::Explicit {
                        p_min: *p_min,
                        p_max: *p_max,
                    },
                    None => ScoreWeights::FromMin(*p_min),
                };
                modified_thresholds(dist, *k0, weights, alpha, psi)?
            }
            RuleSpec::Subprobability { g } => {
                let g = SubProbabilityVector::new(g.clone(), dist)?;
                if g.sum() < 1.0 - alpha - 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "subprobability mass {} is below 1 - alpha = {}",
                        g.sum(),
                        1.0 - alpha
                    )));
                }
                thresholds_from_subprobability(&g, dist, psi)?
            }
            RuleSpec::Constant => constant_thresholds(dist, alpha, psi)?,
            RuleSpec::Optimal {
                alternative,
                c_star,
            } => {
                let c_star = self
                    .resolve_targets(alternative, c_star.as_deref())?
                    .lp_cutoffs()
                    .map(<[f64]>::to_vec)
                    .expect("validated alternative carries a budget");
                let lp = build_lp(dist, alpha, &c_star, psi)?;
                let g = solve_minority_greedy(&lp)?;
                let ts = thresholds_from_subprobability(&g, dist, psi)?;
                design = Some(OptimalDesign { c_star, lp, g });
                ts
            }
        };
        let raw = (0..dist.len())
            .map(|k| self.model.raw_threshold(k, thresholds.standardized[k]))
            .collect();
        thresholds.raw = Some(raw);
        Ok(EstimatedRule {
            rule: rule.clone(),
            alpha,
            n: self.residuals.len(),
            dist: dist.clone(),
            thresholds,
            model: self.model.clone(),
            design,
        })
    }
}

/// A rule estimated from a learning sample, on both scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedRule {
    pub rule: RuleSpec,
    pub alpha: f64,
    pub n: usize,
    pub dist: ClassDistribution,
    pub thresholds: ThresholdSet,
    pub model: StandardizationModel,
    #[serde(default)]
    pub design: Option<OptimalDesign>,
}

impl EstimatedRule {
    pub fn raw(&self) -> &[f64] {
        self.thresholds
            .raw
            .as_deref()
            .expect("estimated rules always carry raw thresholds")
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dist.len();
        self.thresholds.validate(k)?;
        self.model.validate(k)?;
        if self.thresholds.raw.is_none() {
            return Err(Error::InvariantViolation("raw thresholds missing".into()));
        }
        Ok(())
    }
}

/// Standardize, estimate `Psi` by the pooled residuals, apply the rule and
/// map the thresholds back to the measurement scale.
pub fn estimate_rule(
    sample: &LabeledSample,
    rule: &RuleSpec,
    mode: Mode,
    tau: f64,
    alpha: f64,
) -> Result<EstimatedRule> {
    LearningFit::new(sample, mode, tau)?.estimate(rule, alpha)
}
