//! Distribution function and quantile function abstractions for the
//! standardized observations.

use statrs::distribution::{ContinuousCDF, Normal};

/// A nondecreasing map from `[0, 1]` to the real line.
///
/// `quantile(0.0)` is the lower endpoint of the support; it may be `-inf`.
pub trait QuantileFunction {
    fn quantile(&self, q: f64) -> f64;
}

/// A distribution function of the standardized observations.
pub trait Cdf {
    fn cdf(&self, u: f64) -> f64;
}

impl<T: QuantileFunction + ?Sized> QuantileFunction for &T {
    fn quantile(&self, q: f64) -> f64 {
        (**self).quantile(q)
    }
}

impl<T: Cdf + ?Sized> Cdf for &T {
    fn cdf(&self, u: f64) -> f64 {
        (**self).cdf(u)
    }
}

/// Standard normal distribution; the analytic reference pair.
#[derive(Debug, Clone)]
pub struct StandardNormal {
    inner: Normal,
}

impl StandardNormal {
    pub fn new() -> Self {
        Self {
            inner: Normal::standard(),
        }
    }
}

impl Default for StandardNormal {
    fn default() -> Self {
        Self::new()
    }
}

impl QuantileFunction for StandardNormal {
    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            f64::NEG_INFINITY
        } else if q >= 1.0 {
            f64::INFINITY
        } else if q > 0.5 {
            // 1 - q is exact here, and the lower tail keeps full relative precision
            -self.lower_quantile(1.0 - q)
        } else {
            self.lower_quantile(q)
        }
    }
}

impl StandardNormal {
    /// Quantile for `q` in `(0, 0.5]`, refined by Newton steps on the precise cdf.
    fn lower_quantile(&self, q: f64) -> f64 {
        let mut x = self.inner.inverse_cdf(q);
        for _ in 0..3 {
            let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            if density == 0.0 {
                break;
            }
            let step = (self.cdf(x) - q) / density;
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        x
    }
}

impl Cdf for StandardNormal {
    fn cdf(&self, u: f64) -> f64 {
        if u == f64::NEG_INFINITY {
            0.0
        } else if u == f64::INFINITY {
            1.0
        } else {
            0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
        }
    }
}
