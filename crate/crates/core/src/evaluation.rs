//! Alarm decisions on a screening sample and their per-class summaries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{EstimatedRule, LabeledSample};

/// Maps each record's class to a position in `labels`.
fn class_map(screening: &LabeledSample, labels: &[String]) -> Result<Vec<usize>> {
    let lookup: Vec<Option<usize>> = screening
        .labels()
        .iter()
        .map(|l| labels.iter().position(|r| r == l))
        .collect();
    let missing: BTreeSet<String> = screening
        .class()
        .iter()
        .filter(|&&c| lookup[c].is_none())
        .map(|&c| screening.labels()[c].clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnknownClass(missing.into_iter().collect()));
    }
    Ok(screening.class().iter().map(|&c| lookup[c].unwrap()).collect())
}

/// Alarm iff `x > t(z)` (ties are not alarms).
pub fn apply_raw(screening: &LabeledSample, labels: &[String], raw: &[f64]) -> Result<Vec<bool>> {
    if labels.len() != raw.len() {
        return Err(Error::ShapeMismatch {
            expected: labels.len(),
            got: raw.len(),
        });
    }
    let map = class_map(screening, labels)?;
    Ok(screening
        .x()
        .iter()
        .zip(map)
        .map(|(&x, k)| x > raw[k])
        .collect())
}

/// Raw-scale decisions of an estimated rule.
pub fn apply_thresholds(screening: &LabeledSample, rule: &EstimatedRule) -> Result<Vec<bool>> {
    apply_raw(screening, rule.dist.labels(), rule.raw())
}

/// Decisions on the standardized scale, `(x - mu(z)) / sigma(z) > c(z)`.
pub fn apply_standardized(screening: &LabeledSample, rule: &EstimatedRule) -> Result<Vec<bool>> {
    let map = class_map(screening, rule.dist.labels())?;
    Ok(screening
        .x()
        .iter()
        .zip(map)
        .map(|(&x, k)| rule.model.residual(x, k) > rule.thresholds.standardized[k])
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Contingency {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl Contingency {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Sensitivity; `None` without positives.
    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Specificity; `None` without negatives.
    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.fp + self.tn)
    }

    fn add(&mut self, other: &Contingency) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvaluation {
    pub class: String,
    pub n: usize,
    pub alarms: usize,
    pub alarm_rate: Option<f64>,
    #[serde(default)]
    pub counts: Option<Contingency>,
    #[serde(default)]
    pub tpr: Option<f64>,
    #[serde(default)]
    pub tnr: Option<f64>,
}

impl ClassEvaluation {
    fn new(class: String, n: usize, alarms: usize, counts: Option<Contingency>) -> Self {
        Self {
            class,
            n,
            alarms,
            alarm_rate: ratio(alarms, n),
            tpr: counts.and_then(|c| c.tpr()),
            tnr: counts.and_then(|c| c.tnr()),
            counts,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvariantViolation(format!("class {:?}: {what}", self.class)))
        };
        if self.alarms > self.n || self.alarm_rate != ratio(self.alarms, self.n) {
            return bad("alarm rate inconsistent with counts");
        }
        if let Some(c) = &self.counts {
            if c.total() != self.n || c.tp + c.fp != self.alarms {
                return bad("contingency counts do not add up");
            }
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            if !close(self.tpr, c.tpr()) || !close(self.tnr, c.tnr()) {
                return bad("rates inconsistent with contingency counts");
            }
        }
        Ok(())
    }
}

/// Per-class and pooled alarm summaries (and contingency tables when ground truth is known).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classes: Vec<ClassEvaluation>,
    pub overall: ClassEvaluation,
}

impl EvaluationReport {
    pub fn validate(&self) -> Result<()> {
        for c in self.classes.iter().chain([&self.overall]) {
            c.validate()?;
        }
        let n: usize = self.classes.iter().map(|c| c.n).sum();
        let alarms: usize = self.classes.iter().map(|c| c.alarms).sum();
        if n != self.overall.n || alarms != self.overall.alarms {
            return Err(Error::InvariantViolation("overall counts differ from class sums".into()));
        }
        Ok(())
    }

    pub fn class(&self, label: &str) -> Option<&ClassEvaluation> {
        self.classes.iter().find(|c| c.class == label)
    }
}

fn summarize(flags: &[bool], sample: &LabeledSample, truth: Option<&[bool]>) -> Result<EvaluationReport> {
    if flags.len() != sample.len() {
        return Err(Error::ShapeMismatch {
            expected: sample.len(),
            got: flags.len(),
        });
    }
    let k = sample.num_classes();
    let mut n = vec![0usize; k];
    let mut alarms = vec![0usize; k];
    let mut tables = vec![Contingency::default(); k];
    for (t, (&flag, &c)) in flags.iter().zip(sample.class()).enumerate() {
        n[c] += 1;
        alarms[c] += usize::from(flag);
        if let Some(y) = truth {
            let cell = &mut tables[c];
            match (y[t], flag) {
                (true, true) => cell.tp += 1,
                (true, false) => cell.fn_ += 1,
                (false, true) => cell.fp += 1,
                (false, false) => cell.tn += 1,
            }
        }
    }
    let mut pooled = Contingency::default();
    tables.iter().for_each(|t| pooled.add(t));
    let classes = (0..k)
        .map(|c| {
            ClassEvaluation::new(
                sample.labels()[c].clone(),
                n[c],
                alarms[c],
                truth.map(|_| tables[c]),
            )
        })
        .collect();
    let overall = ClassEvaluation::new(
        "overall".into(),
        flags.len(),
        alarms.iter().sum(),
        truth.map(|_| pooled),
    );
    Ok(EvaluationReport { classes, overall })
}

/// Alarm counts and rates only.
pub fn alarm_summary(flags: &[bool], sample: &LabeledSample) -> Result<EvaluationReport> {
    summarize(flags, sample, None)
}

/// Per-class 2x2 tables against the sample's ground truth.
pub fn contingency(flags: &[bool], sample: &LabeledSample) -> Result<EvaluationReport> {
    let y = sample.y().ok_or(Error::MissingGroundTruth)?;
    summarize(flags, sample, Some(y))
}
