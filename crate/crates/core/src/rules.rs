//! Closed-form threshold rules.
//!
//! Every rule here is a member of one family: class `k` receives the
//! threshold `qf(g_k / p_k)` for a subprobability vector `g` with
//! `sum(g) >= 1 - alpha`. The rules differ only in how `g` is chosen.
//! Quantile arguments ("levels") are never clipped; a level at or above 1
//! is reported as an admissibility error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{Cdf, QuantileFunction};

const PROB_SUM_TOL: f64 = 1e-12;

/// Class labels and their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct ClassDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for ClassDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        ClassDistribution::new(raw.labels, raw.probs)
    }
}

impl ClassDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("at least one class is required".into()));
        }
        if labels.len() != probs.len() {
            return Err(Error::ShapeMismatch {
                expected: labels.len(),
                got: probs.len(),
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidParameter(format!("duplicate class label {a:?}")));
            }
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "class probabilities must be finite and nonnegative, got {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "class probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { labels, probs })
    }

    /// Labels `z1..zK` for quick experiments.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (1..=probs.len()).map(|k| format!("z{k}")).collect();
        Self::new(labels, probs)
    }

    /// Relative frequencies; each count is divided by the total exactly once.
    pub fn from_counts(labels: Vec<String>, counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::new(labels, probs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Index of the smallest class probability; ties go to the lowest index.
    pub fn minority_index(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p < self.probs[best] {
                best = k;
            }
        }
        best
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// `g` with `0 <= g_k < p_k` (and `g_k = 0` on empty classes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubProbabilityVector {
    values: Vec<f64>,
}

impl SubProbabilityVector {
    pub fn new(values: Vec<f64>, dist: &ClassDistribution) -> Result<Self> {
        let g = Self { values };
        g.validate(dist)?;
        Ok(g)
    }

    pub(crate) fn new_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn validate(&self, dist: &ClassDistribution) -> Result<()> {
        dist.check_len(self.values.len())?;
        for (k, (&g, &p)) in self.values.iter().zip(dist.probs()).enumerate() {
            let ok = if p > 0.0 {
                g.is_finite() && (0.0..p).contains(&g)
            } else {
                g == 0.0
            };
            if !ok {
                return Err(Error::InvariantViolation(format!(
                    "class {:?}: subprobability {g} outside [0, {p})",
                    dist.labels()[k]
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// The false-alarm level this vector controls, `1 - sum(g)`.
    pub fn implied_alpha(&self) -> f64 {
        1.0 - self.sum()
    }
}

/// Per-class thresholds on the standardized scale, with optional raw-scale
/// counterparts once a standardization model has been applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub alpha: f64,
    /// Quantile arguments `g_k / p_k` fed to the quantile function.
    #[serde(with = "crate::serde_ext::float_vec")]
    pub levels: Vec<f64>,
    #[serde(with = "crate::serde_ext::float_vec")]
    pub standardized: Vec<f64>,
    #[serde(with = "crate::serde_ext::opt_float_vec", default)]
    pub raw: Option<Vec<f64>>,
}

impl ThresholdSet {
    fn from_levels(levels: Vec<f64>, alpha: f64, qf: &impl QuantileFunction) -> Self {
        let standardized = levels.iter().map(|&q| qf.quantile(q)).collect();
        Self {
            alpha,
            levels,
            standardized,
            raw: None,
        }
    }

    pub fn len(&self) -> usize {
        self.standardized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.standardized.is_empty()
    }

    /// `g_k = p_k * level_k`, the subprobability vector behind the thresholds.
    pub fn subprobability(&self, dist: &ClassDistribution) -> Result<SubProbabilityVector> {
        dist.check_len(self.levels.len())?;
        let g = dist
            .probs()
            .iter()
            .zip(&self.levels)
            .map(|(&p, &q)| if p > 0.0 { p * q } else { 0.0 })
            .collect();
        Ok(SubProbabilityVector::new_unchecked(g))
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        for got in [self.levels.len(), self.standardized.len()] {
            if got != k {
                return Err(Error::ShapeMismatch { expected: k, got });
            }
        }
        if let Some(raw) = &self.raw {
            if raw.len() != k {
                return Err(Error::ShapeMismatch {
                    expected: k,
                    got: raw.len(),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvariantViolation(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `(1 - alpha) p_k^gamma / sum_j p_j^(gamma + 1)`; the rule is defined when all are `< 1`.
    pub margins: Vec<f64>,
    /// Indices of classes with positive probability and margin `>= 1`.
    pub offending: Vec<usize>,
}

impl Admissibility {
    fn into_result(self, dist: &ClassDistribution) -> Result<Vec<f64>> {
        if self.admissible {
            return Ok(self.margins);
        }
        Err(Error::Inadmissible {
            classes: self
                .offending
                .iter()
                .map(|&k| dist.labels()[k].clone())
                .collect(),
            margins: self.offending.iter().map(|&k| self.margins[k]).collect(),
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")))
    }
}

/// Levels `(1 - alpha) w_k / sum_j p_j w_j` for class weights `w`.
fn weighted_levels(dist: &ClassDistribution, weights: &[f64], alpha: f64) -> Admissibility {
    let denom: f64 = dist.probs().iter().zip(weights).map(|(p, w)| p * w).sum();
    let margins: Vec<f64> = weights.iter().map(|w| (1.0 - alpha) * w / denom).collect();
    let offending: Vec<usize> = margins
        .iter()
        .zip(dist.probs())
        .enumerate()
        .filter(|(_, (&m, &p))| p > 0.0 && !(m < 1.0))
        .map(|(k, _)| k)
        .collect();
    Admissibility {
        admissible: offending.is_empty(),
        margins,
        offending,
    }
}

fn gamma_weights(dist: &ClassDistribution, gamma: f64) -> Vec<f64> {
    dist.probs().iter().map(|&p| p.powf(gamma)).collect()
}

/// Whether the gamma-proportional rule is defined for `dist` at level `alpha`.
pub fn check_admissibility(
    dist: &ClassDistribution,
    alpha: f64,
    gamma: f64,
) -> Result<Admissibility> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    Ok(weighted_levels(dist, &gamma_weights(dist, gamma), alpha))
}

/// The proportional rule: `c(z_k) = qf((1 - alpha) p_k / sum_j p_j^2)`.
pub fn proportional_thresholds(
    dist: &ClassDistribution,
    alpha: f64,
    qf: &impl QuantileFunction,
) -> Result<ThresholdSet> {
    gamma_proportional_thresholds(dist, 1.0, alpha, qf)
}

/// `c(z_k) = qf((1 - alpha) p_k^gamma / sum_j p_j^(gamma + 1))`.
pub fn gamma_proportional_thresholds(
    dist: &ClassDistribution,
    gamma: f64,
    alpha: f64,
    qf: &impl QuantileFunction,
) -> Result<ThresholdSet> {
    let levels = check_admissibility(dist, alpha, gamma)?.into_result(dist)?;
    Ok(ThresholdSet::from_levels(levels, alpha, qf))
}

/// The classical rule: the same standardized threshold `qf(1 - alpha)` for all classes.
pub fn constant_thresholds(
    dist: &ClassDistribution,
    alpha: f64,
    qf: &impl QuantileFunction,
) -> Result<ThresholdSet> {
    check_alpha(alpha)?;
    let levels = dist
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { 1.0 - alpha } else { 0.0 })
        .collect();
    Ok(ThresholdSet::from_levels(levels, alpha, qf))
}

/// Score weights for the modified rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreWeights {
    /// Derive `p_max = p_min (p_1 + .. + p_k0) / (p_2 + .. + p_k0)`.
    FromMin(f64),
    /// A user-chosen pair, checked against the weight-ratio condition.
    Explicit { p_min: f64, p_max: f64 },
}

/// Modified rule for distributions where the proportional rule is undefined.
///
/// Classes are ranked by probability (ties by input order); the `k0`
/// smallest receive weight `p_min`, the rest `p_max`, and the level is
/// `(1 - alpha) w_k / sum_j p_j w_j`. The result is in input order.
pub fn modified_thresholds(
    dist: &ClassDistribution,
    k0: usize,
    weights: ScoreWeights,
    alpha: f64,
    qf: &impl QuantileFunction,
) -> Result<ThresholdSet> {
    check_alpha(alpha)?;
    let k = dist.len();
    if k0 == 0 || k0 >= k {
        return Err(Error::InvalidParameter(format!(
            "k0 must lie in 1..={}, got {k0}",
            k.saturating_sub(1)
        )));
    }
    if let Some(i) = dist.probs().iter().position(|&p| p <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "modified rule needs positive probabilities; class {:?} has 0",
            dist.labels()[i]
        )));
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dist.probs()[a].total_cmp(&dist.probs()[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| dist.probs()[i]).collect();

    if sorted[0] > alpha {
        return Err(Error::InvalidParameter(format!(
            "smallest class probability {} exceeds alpha {alpha}",
            sorted[0]
        )));
    }
    let head: f64 = sorted[..k0].iter().sum();
    let tail: f64 = sorted[1..k0].iter().sum();

    let (p_min, p_max) = match weights {
        ScoreWeights::FromMin(p_min) => {
            if k0 == 1 {
                return Err(Error::InvalidParameter(
                    "k0 = 1 leaves p_max undefined; supply an explicit (p_min, p_max) pair".into(),
                ));
            }
            (p_min, p_min * head / tail)
        }
        ScoreWeights::Explicit { p_min, p_max } => (p_min, p_max),
    };
    if !(p_min >= alpha) {
        return Err(Error::InvalidParameter(format!(
            "p_min must be at least alpha = {alpha}, got {p_min}"
        )));
    }
    if !(p_min < p_max && p_max < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < p_min < p_max < 1, got p_min = {p_min}, p_max = {p_max}"
        )));
    }
    // p_min / p_max >= tail / head, cross-multiplied; equality is the derived case.
    if p_min * head < tail * p_max * (1.0 - 1e-12) {
        let classes = order[..k0].iter().map(|&i| dist.labels()[i].clone()).collect();
        return Err(Error::Inadmissible {
            classes,
            margins: vec![p_min / p_max, tail / head],
        });
    }

    let mut w = vec![p_max; k];
    for &i in &order[..k0] {
        w[i] = p_min;
    }
    let levels = weighted_levels(dist, &w, alpha).into_result(dist)?;
    Ok(ThresholdSet::from_levels(levels, alpha, qf))
}

/// `c(z_k) = qf(g_k / p_k)`, and `qf(0)` for classes with `p_k = 0`.
///
/// The returned `alpha` is the level implied by `g`, `1 - sum(g)`.
pub fn thresholds_from_subprobability(
    g: &SubProbabilityVector,
    dist: &ClassDistribution,
    qf: &impl QuantileFunction,
) -> Result<ThresholdSet> {
    g.validate(dist)?;
    let levels = g
        .values()
        .iter()
        .zip(dist.probs())
        .map(|(&g, &p)| if p > 0.0 { g / p } else { 0.0 })
        .collect();
    Ok(ThresholdSet::from_levels(levels, g.implied_alpha().max(0.0), qf))
}

/// `sum_k p_k (1 - cdf(c(z_k)))`.
pub fn false_alarm_rate(
    ts: &ThresholdSet,
    dist: &ClassDistribution,
    cdf: &impl Cdf,
) -> Result<f64> {
    dist.check_len(ts.standardized.len())?;
    Ok(dist
        .probs()
        .iter()
        .zip(&ts.standardized)
        .map(|(&p, &c)| p * (1.0 - cdf.cdf(c)))
        .sum())
}
