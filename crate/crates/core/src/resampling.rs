//! Nonparametric bootstrap of estimated thresholds and the smoothed-bootstrap
//! screening simulator.
//!
//! Replicate `i` draws from its own ChaCha8 stream `(seed, i)`, so reports do
//! not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    estimate_rule, standardize, EmpiricalDistribution, EstimatedRule, LabeledSample, Mode,
    RuleSpec,
};
use crate::quantile::QuantileFunction;

pub const DEFAULT_BW_FACTOR: f64 = 1.59;
pub const DEFAULT_CI_LEVEL: f64 = 0.95;
/// Redraws allowed for a single replicate before the run is aborted.
pub const MAX_ATTEMPTS_PER_REPLICATE: usize = 200;

/// Generator for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn is_rejection(e: &Error) -> bool {
    matches!(
        e,
        Error::Inadmissible { .. }
            | Error::Infeasible { .. }
            | Error::DegenerateScale { .. }
            | Error::InsufficientData { .. }
    )
}

/// Runs `f` for every replicate index and returns the results in index order.
/// The first error by index wins, whatever the scheduling.
fn run_replicates<T, F>(b: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<T>> = {
        use rayon::prelude::*;
        (0..b).into_par_iter().map(f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<T>> = (0..b).map(f).collect();
    results.into_iter().collect()
}

struct Replicate {
    rule: EstimatedRule,
    rejected: usize,
}

/// Resamples `n` records with replacement until the pipeline yields a valid rule.
fn draw_replicate(
    sample: &LabeledSample,
    rule: &RuleSpec,
    mode: Mode,
    tau: f64,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Replicate> {
    let n = sample.len();
    let mut rejected = 0;
    loop {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        match estimate_rule(&sample.select(&idx), rule, mode, tau, alpha) {
            Ok(rule) => return Ok(Replicate { rule, rejected }),
            Err(e) if is_rejection(&e) => {
                rejected += 1;
                if rejected >= MAX_ATTEMPTS_PER_REPLICATE {
                    return Err(Error::ReplicateRejection {
                        rejected,
                        attempted: rejected,
                        last: e.to_string(),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn check_rejection_rate(rejected: usize, retained: usize, last: &str) -> Result<()> {
    let attempted = rejected + retained;
    if 2 * rejected > attempted {
        return Err(Error::ReplicateRejection {
            rejected,
            attempted,
            last: last.to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    /// Keep the B x K matrix of standardized replicate thresholds.
    #[serde(default)]
    pub retain_replicates: bool,
}

fn default_ci_level() -> f64 {
    DEFAULT_CI_LEVEL
}

fn default_bw_factor() -> f64 {
    DEFAULT_BW_FACTOR
}

impl BootstrapOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            ci_level: DEFAULT_CI_LEVEL,
            retain_replicates: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(format!(
                "bootstrap needs at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        Ok(())
    }
}

/// Per-class replicate mean, standard error (divisor B - 1) and percentile interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    #[serde(with = "crate::serde_ext::float_vec")]
    pub mean: Vec<f64>,
    #[serde(with = "crate::serde_ext::float_vec")]
    pub se: Vec<f64>,
    #[serde(with = "crate::serde_ext::float_vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::serde_ext::float_vec")]
    pub upper: Vec<f64>,
}

impl ThresholdSummary {
    fn from_columns(columns: &[Vec<f64>], ci_level: f64) -> Result<Self> {
        let tail = (1.0 - ci_level) / 2.0;
        let mut out = Self {
            mean: Vec::new(),
            se: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        };
        for col in columns {
            let b = col.len() as f64;
            let mean = col.iter().sum::<f64>() / b;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
            let ed = EmpiricalDistribution::new(col.clone())?;
            out.mean.push(mean);
            out.se.push(var.sqrt());
            out.lower.push(ed.quantile(tail));
            out.upper.push(ed.quantile(1.0 - tail));
        }
        Ok(out)
    }

    fn validate(&self, k: usize) -> Result<()> {
        for v in [&self.mean, &self.se, &self.lower, &self.upper] {
            if v.len() != k {
                return Err(Error::ShapeMismatch { expected: k, got: v.len() });
            }
        }
        if self.se.iter().any(|s| *s < 0.0) {
            return Err(Error::InvariantViolation("negative standard error".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(Error::InvariantViolation("interval endpoints out of order".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub labels: Vec<String>,
    pub replicates: usize,
    pub seed: u64,
    pub ci_level: f64,
    /// Resamples drawn, including rejected ones.
    pub attempted: usize,
    pub rejected: usize,
    /// Estimate on the original sample.
    pub estimate: EstimatedRule,
    pub standardized: ThresholdSummary,
    pub raw: ThresholdSummary,
    #[serde(default)]
    pub replicate_thresholds: Option<Vec<Vec<f64>>>,
}

impl BootstrapReport {
    pub fn validate(&self) -> Result<()> {
        let k = self.labels.len();
        self.estimate.validate()?;
        self.standardized.validate(k)?;
        self.raw.validate(k)?;
        if self.attempted != self.replicates + self.rejected {
            return Err(Error::InvariantViolation("replicate counters do not add up".into()));
        }
        if let Some(m) = &self.replicate_thresholds {
            if m.len() != self.replicates || m.iter().any(|r| r.len() != k) {
                return Err(Error::InvariantViolation("replicate matrix has the wrong shape".into()));
            }
        }
        Ok(())
    }
}

fn columns(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Bootstrap distribution of the estimated thresholds.
///
/// Each replicate resamples the `(x, z)` pairs and reruns the whole pipeline
/// (moments in the same mode, residuals, frequencies, rule). Replicates whose
/// rule is inadmissible or whose scale degenerates are redrawn and counted;
/// the run aborts when more than half of all draws are rejected.
pub fn bootstrap_thresholds(
    sample: &LabeledSample,
    rule: &RuleSpec,
    mode: Mode,
    tau: f64,
    alpha: f64,
    opts: &BootstrapOptions,
) -> Result<BootstrapReport> {
    opts.validate()?;
    let estimate = estimate_rule(sample, rule, mode, tau, alpha)?;
    let reps = run_replicates(opts.replicates, |i| {
        let mut rng = replicate_rng(opts.seed, i as u64);
        draw_replicate(sample, rule, mode, tau, alpha, &mut rng)
    })?;
    let rejected: usize = reps.iter().map(|r| r.rejected).sum();
    check_rejection_rate(rejected, reps.len(), "inadmissible or degenerate resample")?;

    let k = estimate.dist.len();
    let std_rows: Vec<Vec<f64>> = reps.iter().map(|r| r.rule.thresholds.standardized.clone()).collect();
    let raw_rows: Vec<Vec<f64>> = reps.iter().map(|r| r.rule.raw().to_vec()).collect();
    let standardized = ThresholdSummary::from_columns(&columns(&std_rows, k), opts.ci_level)?;
    let raw = ThresholdSummary::from_columns(&columns(&raw_rows, k), opts.ci_level)?;
    Ok(BootstrapReport {
        labels: estimate.dist.labels().to_vec(),
        replicates: opts.replicates,
        seed: opts.seed,
        ci_level: opts.ci_level,
        attempted: opts.replicates + rejected,
        rejected,
        estimate,
        standardized,
        raw,
        replicate_thresholds: opts.retain_replicates.then_some(std_rows),
    })
}

/// Which standard deviation scales the smoothing noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingScale {
    /// Standard deviation within the record's class.
    Class,
    /// Standard deviation of the whole sample.
    Marginal,
}

impl SmoothingScale {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Conditional => SmoothingScale::Class,
            Mode::Marginal => SmoothingScale::Marginal,
        }
    }
}

impl std::str::FromStr for SmoothingScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class" => Ok(SmoothingScale::Class),
            "marginal" => Ok(SmoothingScale::Marginal),
            other => Err(Error::InvalidParameter(format!(
                "smoothing scale must be class or marginal, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Size of each synthetic screening population.
    pub population: usize,
    pub replicates: usize,
    #[serde(default = "default_bw_factor")]
    pub bw_factor: f64,
    /// Defaults to the class scale in conditional mode and the marginal one otherwise.
    #[serde(default)]
    pub smoothing: Option<SmoothingScale>,
    pub seed: u64,
}

impl SimulationOptions {
    pub fn new(population: usize, replicates: usize, seed: u64) -> Self {
        Self {
            population,
            replicates,
            bw_factor: DEFAULT_BW_FACTOR,
            smoothing: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.population == 0 || self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "population size and replicate count must be positive".into(),
            ));
        }
        if !(self.bw_factor >= 0.0 && self.bw_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth factor must be finite and non-negative, got {}",
                self.bw_factor
            )));
        }
        Ok(())
    }
}

/// Alarm counts of one synthetic screening population.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningOutcome {
    pub counts: Vec<usize>,
    pub alarms: Vec<usize>,
}

impl ScreeningOutcome {
    pub fn population(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn marginal_rate(&self) -> f64 {
        self.alarms.iter().sum::<usize>() as f64 / self.population() as f64
    }

    /// `None` for classes that did not occur in the population.
    pub fn class_rates(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .zip(&self.alarms)
            .map(|(&n, &a)| (n > 0).then(|| a as f64 / n as f64))
            .collect()
    }
}

/// Draws `population` records from `sample` with replacement, adds centered
/// Gaussian noise with class-specific sd `bandwidth[z]` and counts `x > raw[z]`.
pub fn smoothed_screen<R: Rng + ?Sized>(
    sample: &LabeledSample,
    raw: &[f64],
    bandwidth: &[f64],
    population: usize,
    rng: &mut R,
) -> ScreeningOutcome {
    let k = sample.num_classes();
    let n = sample.len();
    let mut counts = vec![0; k];
    let mut alarms = vec![0; k];
    for _ in 0..population {
        let t = rng.random_range(0..n);
        let z = sample.class()[t];
        let eps: f64 = rng.sample(StandardNormal);
        let x = sample.x()[t] + bandwidth[z] * eps;
        counts[z] += 1;
        alarms[z] += usize::from(x > raw[z]);
    }
    ScreeningOutcome { counts, alarms }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningSimReport {
    pub labels: Vec<String>,
    pub replicates: usize,
    pub population: usize,
    pub bw_factor: f64,
    pub smoothing: SmoothingScale,
    /// Noise standard deviation per class.
    pub bandwidth: Vec<f64>,
    pub seed: u64,
    pub rejected: usize,
    /// Average over replicates of the population-wide alarm fraction.
    pub marginal_rate: f64,
    /// Average over the replicates in which the class occurred.
    pub class_rates: Vec<Option<f64>>,
    pub class_replicates: Vec<usize>,
}

impl ScreeningSimReport {
    pub fn validate(&self) -> Result<()> {
        let k = self.labels.len();
        for got in [self.bandwidth.len(), self.class_rates.len(), self.class_replicates.len()] {
            if got != k {
                return Err(Error::ShapeMismatch { expected: k, got });
            }
        }
        let unit = |r: f64| (0.0..=1.0).contains(&r);
        if !unit(self.marginal_rate) || self.class_rates.iter().flatten().any(|&r| !unit(r)) {
            return Err(Error::InvariantViolation("alarm rate outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Smoothed-bootstrap screening simulation.
///
/// Per replicate: estimate raw thresholds on a size-`n` bootstrap resample,
/// screen a size-`N` smoothed resample of the original data against them and
/// record the alarm fractions. Rates are averaged over replicates.
pub fn smoothed_screening_sim(
    sample: &LabeledSample,
    rule: &RuleSpec,
    mode: Mode,
    tau: f64,
    alpha: f64,
    opts: &SimulationOptions,
) -> Result<ScreeningSimReport> {
    opts.validate()?;
    let base = estimate_rule(sample, rule, mode, tau, alpha)?;
    let smoothing = opts.smoothing.unwrap_or_else(|| SmoothingScale::for_mode(mode));
    let scale = match (smoothing, mode) {
        (SmoothingScale::Class, Mode::Conditional) | (SmoothingScale::Marginal, Mode::Marginal) => {
            base.model.scale.clone()
        }
        (SmoothingScale::Class, Mode::Marginal) => standardize(sample, Mode::Conditional, tau)?.1.scale,
        (SmoothingScale::Marginal, Mode::Conditional) => standardize(sample, Mode::Marginal, tau)?.1.scale,
    };
    let shrink = (opts.population as f64).powf(-0.2);
    let bandwidth: Vec<f64> = scale.iter().map(|s| opts.bw_factor * s * shrink).collect();

    let outcomes = run_replicates(opts.replicates, |i| {
        let mut rng = replicate_rng(opts.seed, i as u64);
        let rep = draw_replicate(sample, rule, mode, tau, alpha, &mut rng)?;
        let outcome = smoothed_screen(sample, rep.rule.raw(), &bandwidth, opts.population, &mut rng);
        Ok((outcome, rep.rejected))
    })?;
    let rejected: usize = outcomes.iter().map(|o| o.1).sum();
    check_rejection_rate(rejected, outcomes.len(), "inadmissible or degenerate resample")?;

    let k = sample.num_classes();
    let mut sums = vec![0.0; k];
    let mut seen = vec![0usize; k];
    let mut marginal = 0.0;
    for (o, _) in &outcomes {
        marginal += o.marginal_rate();
        for (j, r) in o.class_rates().into_iter().enumerate() {
            if let Some(r) = r {
                sums[j] += r;
                seen[j] += 1;
            }
        }
    }
    let class_rates = sums
        .iter()
        .zip(&seen)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(ScreeningSimReport {
        labels: sample.labels().to_vec(),
        replicates: opts.replicates,
        population: opts.population,
        bw_factor: opts.bw_factor,
        smoothing,
        bandwidth,
        seed: opts.seed,
        rejected,
        marginal_rate: marginal / outcomes.len() as f64,
        class_rates,
        class_replicates: seen,
    })
}
