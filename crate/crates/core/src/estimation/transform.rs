use serde::{Deserialize, Serialize};

use super::ecdf::EmpiricalDistribution;
use crate::error::{Error, Result};

/// Two-class split of a continuous covariate at an empirical quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub cutoff: f64,
    /// `value > cutoff` per record.
    pub high: Vec<bool>,
    /// All values equal, so nothing can be high.
    pub constant: bool,
}

impl Dichotomy {
    pub fn high_count(&self) -> usize {
        self.high.iter().filter(|&&h| h).count()
    }
}

/// Marks a record high iff its value strictly exceeds the empirical `q`-quantile.
pub fn dichotomize_top_quantile(values: &[f64], q: f64) -> Result<Dichotomy> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must lie in (0, 1), got {q}")));
    }
    let ed = EmpiricalDistribution::new(values.to_vec())?;
    let cutoff = ed.try_quantile(q)?;
    Ok(Dichotomy {
        cutoff,
        high: values.iter().map(|&v| v > cutoff).collect(),
        constant: ed.min() == ed.max(),
    })
}

/// Scaled sums `h^{-1/2} * (xi_{t-h+1} + .. + xi_t)` over non-overlapping
/// windows ending at `t = h, 2h, ..`; a trailing partial window is dropped.
pub fn cusum_transform(series: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::InvalidParameter("window length must be at least 1".into()));
    }
    if h > series.len() {
        return Err(Error::InvalidParameter(format!(
            "window length {h} exceeds series length {}",
            series.len()
        )));
    }
    let scale = (h as f64).sqrt().recip();
    Ok(series
        .chunks_exact(h)
        .map(|w| w.iter().sum::<f64>() * scale)
        .collect())
}
