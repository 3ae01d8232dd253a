use serde::{Deserialize, Serialize};

use super::sample::LabeledSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One location/scale pair for the whole sample.
    Marginal,
    /// Location/scale estimated separately within each class.
    #[default]
    Conditional,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(Mode::Marginal),
            "conditional" => Ok(Mode::Conditional),
            other => Err(Error::InvalidParameter(format!(
                "mode must be marginal or conditional, got {other:?}"
            ))),
        }
    }
}

/// Location and scale per class (identical entries in marginal mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationModel {
    pub mode: Mode,
    /// Truncation constant; `inf` disables truncation.
    #[serde(with = "crate::serde_ext::float")]
    pub tau: f64,
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardizationModel {
    pub fn residual(&self, x: f64, class: usize) -> f64 {
        (x - self.location[class]) / self.scale[class]
    }

    /// Largest measurement that is not flagged by the standardized threshold `c`.
    ///
    /// Starts from `location + scale * c` and steps by single ulps until
    /// `x > t` agrees exactly with `residual(x) > c` for every float `x`.
    pub fn raw_threshold(&self, class: usize, c: f64) -> f64 {
        let t0 = self.location[class] + self.scale[class] * c;
        if !t0.is_finite() {
            return t0;
        }
        let flagged = |x: f64| self.residual(x, class) > c;
        let mut t = t0;
        if flagged(t) {
            while flagged(t) && t.is_finite() {
                t = t.next_down();
            }
        } else {
            while !flagged(t.next_up()) && t.next_up().is_finite() {
                t = t.next_up();
            }
        }
        t
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        for got in [self.location.len(), self.scale.len()] {
            if got != k {
                return Err(Error::ShapeMismatch { expected: k, got });
            }
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvariantViolation("scale estimates must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvariantViolation(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

fn truncate(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        x
    } else {
        0.0
    }
}

/// ML (divide-by-count) mean and standard deviation of the truncated values.
fn moments<'a>(values: impl Iterator<Item = &'a f64> + Clone, tau: f64) -> (f64, f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut peak = 0.0_f64;
    for &v in values.clone() {
        let t = truncate(v, tau);
        sum += t;
        peak = peak.max(t.abs());
        n += 1;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|&v| (truncate(v, tau) - mean).powi(2)).sum();
    (mean, (ss / n as f64).sqrt(), peak)
}

fn degenerate(sd: f64, peak: f64) -> bool {
    !(sd > f64::EPSILON * peak) || !sd.is_finite()
}

/// Residuals `(x - mu) / sigma` with moments from the (truncated) sample.
///
/// In conditional mode every class with data needs at least two records;
/// classes absent from the sample fall back to the pooled moments.
pub fn standardize(
    sample: &LabeledSample,
    mode: Mode,
    tau: f64,
) -> Result<(Vec<f64>, StandardizationModel)> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let k = sample.num_classes();
    let (mu, sd, peak) = moments(sample.x().iter(), tau);
    let (location, scale) = match mode {
        Mode::Marginal => {
            if degenerate(sd, peak) {
                return Err(Error::DegenerateScale {
                    class: "(all classes)".into(),
                });
            }
            (vec![mu; k], vec![sd; k])
        }
        Mode::Conditional => {
            let counts = sample.counts();
            let mut by_class: Vec<Vec<f64>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
            for (&x, &c) in sample.x().iter().zip(sample.class()) {
                by_class[c].push(x);
            }
            let mut location = Vec::with_capacity(k);
            let mut scale = Vec::with_capacity(k);
            for (label, xs) in sample.labels().iter().zip(&by_class) {
                match xs.len() {
                    0 => {
                        location.push(mu);
                        scale.push(sd);
                    }
                    1 => {
                        return Err(Error::InsufficientData {
                            class: label.clone(),
                            count: 1,
                        })
                    }
                    _ => {
                        let (m, s, p) = moments(xs.iter(), tau);
                        if degenerate(s, p) {
                            return Err(Error::DegenerateScale { class: label.clone() });
                        }
                        location.push(m);
                        scale.push(s);
                    }
                }
            }
            (location, scale)
        }
    };
    let model = StandardizationModel {
        mode,
        tau,
        location,
        scale,
    };
    let residuals = sample
        .x()
        .iter()
        .zip(sample.class())
        .map(|(&x, &c)| model.residual(x, c))
        .collect();
    Ok((residuals, model))
}
