//! Optimal threshold designs.
//!
//! Under the alternative, a standardized observation of class `k` is
//! distributed as `delta_k + sigma_k * U` with `U ~ Psi`. Class `k` keeps
//! detection power `1 - beta_k` as long as its threshold stays below
//! `c*_k = delta_k + sigma_k * Psi^{-1}(beta_k)`, i.e. as long as
//! `g_k <= b_k = p_k * Psi(c*_k)`. Together with `sum(g) >= 1 - alpha` this
//! is a box-plus-sum linear system; among its solutions we pick the one
//! with the smallest `g` (lowest threshold) for the minority class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{Cdf, QuantileFunction};
use crate::rules::{ClassDistribution, SubProbabilityVector, ThresholdSet};
use crate::simplex::{self, SimplexError};

/// Slack used when comparing the design conditions.
pub const CHECK_TOL: f64 = 1e-12;
const STRICT_CAP: f64 = 1e-12;

/// Shift/scale alternative with marginal and/or per-class type II budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSpec {
    pub delta: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta_k: Option<Vec<f64>>,
}

fn unit_open(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl AlternativeSpec {
    pub fn new(
        delta: Vec<f64>,
        sigma: Vec<f64>,
        beta: Option<f64>,
        beta_k: Option<Vec<f64>>,
    ) -> Result<Self> {
        let alt = Self {
            delta,
            sigma,
            beta,
            beta_k,
        };
        alt.validate(alt.delta.len())?;
        Ok(alt)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        for got in [self.delta.len(), self.sigma.len()] {
            if got != k {
                return Err(Error::ShapeMismatch { expected: k, got });
            }
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}")));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        if self.beta.is_none() && self.beta_k.is_none() {
            return Err(Error::InvalidParameter(
                "alternative needs a marginal beta or per-class beta_k".into(),
            ));
        }
        if let Some(b) = self.beta {
            if !unit_open(b) {
                return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {b}")));
            }
        }
        if let Some(bk) = &self.beta_k {
            if bk.len() != k {
                return Err(Error::ShapeMismatch {
                    expected: k,
                    got: bk.len(),
                });
            }
            if let Some(b) = bk.iter().find(|b| !unit_open(**b)) {
                return Err(Error::InvalidParameter(format!("beta_k must lie in (0, 1), got {b}")));
            }
        }
        if self.delta.iter().all(|&d| d == 0.0) && self.sigma.iter().all(|&s| s == 1.0) {
            return Err(Error::InvalidParameter(
                "alternative coincides with the null (delta = 0, sigma = 1)".into(),
            ));
        }
        Ok(())
    }
}

/// `delta_k + sigma_k * qf(budget_k)` per class.
pub fn c_opt_star(
    alt: &AlternativeSpec,
    budgets: &[f64],
    qf: &impl QuantileFunction,
) -> Result<Vec<f64>> {
    let k = alt.delta.len();
    if budgets.len() != k || alt.sigma.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            got: budgets.len().min(alt.sigma.len()),
        });
    }
    if let Some(b) = budgets.iter().find(|b| !unit_open(**b)) {
        return Err(Error::InvalidParameter(format!("budgets must lie in (0, 1), got {b}")));
    }
    Ok(alt
        .delta
        .iter()
        .zip(&alt.sigma)
        .zip(budgets)
        .map(|((d, s), &b)| d + s * qf.quantile(b))
        .collect())
}

/// Largest admissible thresholds implied by an alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTargets {
    /// `c*(z_k; beta)` for the marginal budget.
    pub marginal: Option<Vec<f64>>,
    /// `c*(z_k; beta_k)` for per-class budgets.
    pub per_class: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub beta_k: Option<Vec<f64>>,
}

impl DesignTargets {
    pub fn from_alternative(alt: &AlternativeSpec, qf: &impl QuantileFunction) -> Result<Self> {
        let k = alt.delta.len();
        alt.validate(k)?;
        let marginal = alt
            .beta
            .map(|b| c_opt_star(alt, &vec![b; k], qf))
            .transpose()?;
        let per_class = alt
            .beta_k
            .as_ref()
            .map(|bk| c_opt_star(alt, bk, qf))
            .transpose()?;
        Ok(Self {
            marginal,
            per_class,
            beta: alt.beta,
            beta_k: alt.beta_k.clone(),
        })
    }

    /// The cutoffs bounding the LP: per-class if given, else the marginal ones.
    pub fn lp_cutoffs(&self) -> Option<&[f64]> {
        self.per_class.as_deref().or(self.marginal.as_deref())
    }
}

/// `A g <= b`, `g >= 0`, minimizing `d . g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    /// First row `-1`, then the identity.
    pub a: Vec<Vec<f64>>,
    /// `(alpha - 1, p # Psi(c*))`.
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    /// Class whose `g` is minimized.
    pub minority: usize,
}

impl LpInstance {
    /// Builds the instance from upper bounds `b_k` directly.
    pub fn from_bounds(alpha: f64, upper: Vec<f64>, minority: usize) -> Result<Self> {
        let k = upper.len();
        if k == 0 || minority >= k {
            return Err(Error::InvalidParameter("empty instance or minority out of range".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let mut a = Vec::with_capacity(k + 1);
        a.push(vec![-1.0; k]);
        for i in 0..k {
            let mut row = vec![0.0; k];
            row[i] = 1.0;
            a.push(row);
        }
        let mut b = Vec::with_capacity(k + 1);
        b.push(alpha - 1.0);
        b.extend(upper);
        let mut d = vec![0.0; k];
        d[minority] = 1.0;
        Ok(Self { a, b, d, minority })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.b[1..]
    }

    pub fn required_mass(&self) -> f64 {
        -self.b[0]
    }

    pub fn objective(&self, g: &[f64]) -> f64 {
        self.d.iter().zip(g).map(|(d, g)| d * g).sum()
    }

    /// Zero objective: any feasible point will do.
    pub fn feasibility_only(mut self) -> Self {
        self.d.iter_mut().for_each(|d| *d = 0.0);
        self
    }

    /// Largest violation of `A g <= b` and `g >= 0`.
    pub fn max_violation(&self, g: &[f64]) -> f64 {
        let mut worst = g.iter().map(|&x| -x).fold(0.0_f64, f64::max);
        for (row, &bi) in self.a.iter().zip(&self.b) {
            let lhs: f64 = row.iter().zip(g).map(|(a, x)| a * x).sum();
            worst = worst.max(lhs - bi);
        }
        worst
    }

    fn clamp(&self, g: Vec<f64>) -> SubProbabilityVector {
        let g = g
            .into_iter()
            .zip(self.upper_bounds())
            .map(|(x, &ub)| x.clamp(0.0, ub))
            .collect();
        SubProbabilityVector::new_unchecked(g)
    }
}

/// `b_k = p_k * cdf(c*_k)`, capped just below `p_k` so `g_k < p_k` stays possible.
pub fn build_lp(
    dist: &ClassDistribution,
    alpha: f64,
    c_star: &[f64],
    cdf: &impl Cdf,
) -> Result<LpInstance> {
    if c_star.len() != dist.len() {
        return Err(Error::ShapeMismatch {
            expected: dist.len(),
            got: c_star.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let upper = dist
        .probs()
        .iter()
        .zip(c_star)
        .map(|(&p, &c)| {
            let b = p * cdf.cdf(c);
            if p > 0.0 && b >= p {
                p * (1.0 - STRICT_CAP)
            } else {
                b
            }
        })
        .collect();
    LpInstance::from_bounds(alpha, upper, dist.minority_index())
}

fn infeasible_gap(inst: &LpInstance) -> f64 {
    inst.required_mass() - inst.upper_bounds().iter().sum::<f64>()
}

/// Closed-form optimum: every other class at its bound, the minority class
/// takes whatever mass is still missing.
pub fn solve_minority_greedy(inst: &LpInstance) -> Result<SubProbabilityVector> {
    let gap = infeasible_gap(inst);
    if gap > CHECK_TOL {
        return Err(Error::Infeasible { gap });
    }
    let ks = inst.minority;
    let others: f64 = inst
        .upper_bounds()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ks)
        .map(|(_, b)| b)
        .sum();
    let mut g = inst.upper_bounds().to_vec();
    g[ks] = (inst.required_mass() - others).max(0.0);
    Ok(inst.clamp(g))
}

/// Optimum from the dense two-phase simplex.
pub fn solve_simplex(inst: &LpInstance) -> Result<SubProbabilityVector> {
    match simplex::minimize(&inst.d, &inst.a, &inst.b) {
        Ok(opt) => {
            let v = inst.max_violation(&opt.x);
            if v > 1e-9 {
                return Err(Error::InvariantViolation(format!(
                    "simplex returned a point violating the constraints by {v:e}"
                )));
            }
            Ok(inst.clamp(opt.x))
        }
        Err(SimplexError::Infeasible { .. }) => Err(Error::Infeasible {
            gap: infeasible_gap(inst),
        }),
        Err(SimplexError::Unbounded) => Err(Error::InvariantViolation(
            "bounded design LP reported unbounded".into(),
        )),
        Err(e) => Err(Error::InvariantViolation(format!("simplex failed: {e:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub marginal: f64,
    pub conditional: Vec<f64>,
}

/// Detection power of `ts` under the alternative: per class
/// `1 - cdf((c_k - delta_k) / sigma_k)`, and the `p`-weighted mean.
pub fn predicted_power(
    ts: &ThresholdSet,
    alt: &AlternativeSpec,
    dist: &ClassDistribution,
    cdf: &impl Cdf,
) -> Result<PowerReport> {
    let k = dist.len();
    if ts.len() != k || alt.delta.len() != k || alt.sigma.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            got: ts.len(),
        });
    }
    if let Some(s) = alt.sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}")));
    }
    let conditional: Vec<f64> = ts
        .standardized
        .iter()
        .zip(alt.delta.iter().zip(&alt.sigma))
        .map(|(&c, (&d, &s))| 1.0 - cdf.cdf((c - d) / s))
        .collect();
    let marginal = dist.probs().iter().zip(&conditional).map(|(p, c)| p * c).sum();
    Ok(PowerReport {
        marginal,
        conditional,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl Check {
    fn le(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            passed: lhs <= rhs + CHECK_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    pub class: String,
    #[serde(with = "crate::serde_ext::float")]
    pub lhs: f64,
    #[serde(with = "crate::serde_ext::float")]
    pub rhs: f64,
    pub passed: bool,
}

fn class_checks(dist: &ClassDistribution, lhs: &[f64], rhs: &[f64]) -> Vec<ClassCheck> {
    dist.labels()
        .iter()
        .zip(lhs.iter().zip(rhs))
        .map(|(l, (&a, &b))| ClassCheck {
            class: l.clone(),
            lhs: a,
            rhs: b,
            passed: a <= b + CHECK_TOL,
        })
        .collect()
}

/// Pass/fail of each sufficient condition for a level-alpha design with the
/// requested power. Conditions without the needed budget are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    /// False-alarm constraint `sum_k p_k (1 - Psi(c_k)) <= alpha`.
    pub false_alarm: Check,
    /// `c_k <= c*(z_k; beta)`.
    pub marginal_power: Option<Vec<ClassCheck>>,
    /// `c_k <= c*(z_k; beta_k)`.
    pub conditional_power: Option<Vec<ClassCheck>>,
    /// `sum_k p_k beta_k <= beta`.
    pub budget_sum: Option<Check>,
    /// `g_k <= b_k = p_k Psi(c*_k)`, the same bound on the probability scale.
    pub subprobability_bounds: Option<Vec<ClassCheck>>,
    pub all_passed: bool,
}

/// Checks the sufficient design conditions for `ts` against precomputed cutoffs.
pub fn verify_conditions(
    ts: &ThresholdSet,
    targets: &DesignTargets,
    dist: &ClassDistribution,
    alpha: f64,
    cdf: &impl Cdf,
) -> Result<DesignReport> {
    let k = dist.len();
    ts.validate(k)?;
    let cdf_c: Vec<f64> = ts.standardized.iter().map(|&c| cdf.cdf(c)).collect();
    let fa: f64 = dist.probs().iter().zip(&cdf_c).map(|(p, f)| p * (1.0 - f)).sum();
    let false_alarm = Check::le(fa, alpha);

    let marginal_power = targets
        .marginal
        .as_ref()
        .map(|c| class_checks(dist, &ts.standardized, c));
    let conditional_power = targets
        .per_class
        .as_ref()
        .map(|c| class_checks(dist, &ts.standardized, c));
    let budget_sum = match (targets.beta, &targets.beta_k) {
        (Some(b), Some(bk)) => {
            let s = dist.probs().iter().zip(bk).map(|(p, b)| p * b).sum();
            Some(Check::le(s, b))
        }
        _ => None,
    };
    let subprobability_bounds = targets.lp_cutoffs().map(|cut| {
        let g: Vec<f64> = dist.probs().iter().zip(&cdf_c).map(|(p, f)| p * f).collect();
        let b: Vec<f64> = dist.probs().iter().zip(cut).map(|(p, &c)| p * cdf.cdf(c)).collect();
        class_checks(dist, &g, &b)
    });

    let all_passed = false_alarm.passed
        && [&marginal_power, &conditional_power, &subprobability_bounds]
            .into_iter()
            .flatten()
            .all(|v| v.iter().all(|c| c.passed))
        && budget_sum.as_ref().is_none_or(|c| c.passed);
    Ok(DesignReport {
        false_alarm,
        marginal_power,
        conditional_power,
        budget_sum,
        subprobability_bounds,
        all_passed,
    })
}

/// [`verify_conditions`] with cutoffs derived from the alternative.
pub fn verify_design<D: Cdf + QuantileFunction>(
    ts: &ThresholdSet,
    alt: &AlternativeSpec,
    dist: &ClassDistribution,
    alpha: f64,
    psi: &D,
) -> Result<DesignReport> {
    let targets = DesignTargets::from_alternative(alt, psi)?;
    verify_conditions(ts, &targets, dist, alpha, psi)
}
