use crate::error::{Error, Result};
use crate::quantile::{Cdf, QuantileFunction};

/// Empirical distribution of a finite sample.
///
/// `cdf(u) = #{v <= u} / n` and the quantile is its left-continuous
/// generalized inverse `inf { u : cdf(u) >= q }`, i.e. the order statistic
/// of rank `ceil(q n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN in empirical sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    fn frac(&self, count: usize) -> f64 {
        count as f64 / self.sorted.len() as f64
    }

    /// Smallest rank `r` (1-based) with `r / n >= q`, using the same
    /// floating-point division as [`Cdf::cdf`].
    fn rank(&self, q: f64) -> usize {
        let n = self.sorted.len();
        let mut r = ((q * n as f64).ceil() as usize).clamp(1, n);
        while r > 1 && self.frac(r - 1) >= q {
            r -= 1;
        }
        while r < n && self.frac(r) < q {
            r += 1;
        }
        r
    }

    /// Generalized inverse for `q` in `(0, 1]`.
    pub fn try_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level must lie in (0, 1], got {q}")));
        }
        Ok(self.sorted[self.rank(q) - 1])
    }
}

impl Cdf for EmpiricalDistribution {
    fn cdf(&self, u: f64) -> f64 {
        self.frac(self.sorted.partition_point(|&v| v <= u))
    }
}

impl QuantileFunction for EmpiricalDistribution {
    /// `q <= 0` gives the sample minimum (the lower endpoint), `q >= 1` the maximum.
    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            self.min()
        } else if q >= 1.0 {
            self.max()
        } else {
            self.sorted[self.rank(q) - 1]
        }
    }
}
