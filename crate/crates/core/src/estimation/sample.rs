use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::ClassDistribution;

/// Measurements with their class and optional ground truth.
///
/// Stored column-wise; `class[t]` indexes into `labels`. The label set may
/// contain classes that never occur in the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    labels: Vec<String>,
    x: Vec<f64>,
    class: Vec<usize>,
    y: Option<Vec<bool>>,
}

impl LabeledSample {
    pub fn new(
        labels: Vec<String>,
        x: Vec<f64>,
        class: Vec<usize>,
        y: Option<Vec<bool>>,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptySample);
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter("empty label set".into()));
        }
        if class.len() != x.len() {
            return Err(Error::ShapeMismatch {
                expected: x.len(),
                got: class.len(),
            });
        }
        if let Some(y) = &y {
            if y.len() != x.len() {
                return Err(Error::ShapeMismatch {
                    expected: x.len(),
                    got: y.len(),
                });
            }
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidParameter(format!("duplicate class label {a:?}")));
            }
        }
        if let Some(&c) = class.iter().find(|&&c| c >= labels.len()) {
            return Err(Error::InvalidParameter(format!("class index {c} out of range")));
        }
        if let Some(t) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite measurement at record {t}")));
        }
        Ok(Self { labels, x, class, y })
    }

    /// Builds a sample from `(x, label, y)` records.
    ///
    /// With `declared = None` the label set is the sorted set of observed
    /// labels. With a declared set, every observed label must belong to it.
    pub fn from_records<S, I>(records: I, declared: Option<Vec<String>>) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (f64, S, Option<bool>)>,
    {
        let mut x = Vec::new();
        let mut raw_labels = Vec::new();
        let mut y = Vec::new();
        let mut with_y = 0usize;
        for (xi, z, yi) in records {
            x.push(xi);
            raw_labels.push(z.as_ref().to_owned());
            if let Some(v) = yi {
                with_y += 1;
                y.push(v);
            }
        }
        if x.is_empty() {
            return Err(Error::EmptySample);
        }
        if with_y != 0 && with_y != x.len() {
            return Err(Error::InvalidParameter(format!(
                "ground truth present for {with_y} of {} records",
                x.len()
            )));
        }
        let labels = match declared {
            Some(d) => {
                let unknown: BTreeSet<&String> =
                    raw_labels.iter().filter(|l| !d.contains(l)).collect();
                if !unknown.is_empty() {
                    return Err(Error::UnknownClass(unknown.into_iter().cloned().collect()));
                }
                d
            }
            None => raw_labels
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        let class = raw_labels
            .iter()
            .map(|l| labels.iter().position(|d| d == l).expect("label resolved above"))
            .collect();
        Self::new(labels, x, class, (with_y > 0).then_some(y))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn class(&self) -> &[usize] {
        &self.class
    }

    pub fn y(&self) -> Option<&[bool]> {
        self.y.as_deref()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for &c in &self.class {
            counts[c] += 1;
        }
        counts
    }

    /// Records at the given indices (repeats allowed), same label set.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            labels: self.labels.clone(),
            x: idx.iter().map(|&i| self.x[i]).collect(),
            class: idx.iter().map(|&i| self.class[i]).collect(),
            y: self.y.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
        }
    }

    /// Same records, measurements replaced.
    pub fn with_x(&self, x: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), x, self.class.clone(), self.y.clone())
    }
}

/// `p_k = count_k / n` over the sample's label set.
pub fn relative_frequencies(sample: &LabeledSample) -> Result<ClassDistribution> {
    ClassDistribution::from_counts(sample.labels.clone(), &sample.counts())
}
