use std::path::PathBuf;
use std::str::FromStr;

use covthresh::design::AlternativeSpec;
use covthresh::estimation::{Mode, RuleSpec};
use covthresh::resampling::{BootstrapOptions, SimulationOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// How the columns of the input file map to measurement, class and outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub x: String,
    pub z: String,
    #[serde(default)]
    pub y: Option<String>,
    /// Split a numeric `z` at its empirical `q`-quantile into high/low classes.
    #[serde(default)]
    pub dichotomize: Option<f64>,
    /// Names of the high and low classes after dichotomization.
    #[serde(default = "default_dichotomy_labels")]
    pub dichotomize_labels: [String; 2],
    /// Rows with a non-positive value in any of these columns are dropped.
    #[serde(default)]
    pub drop_nonpositive: Vec<String>,
    /// Declared class labels, in order; defaults to the sorted observed labels.
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

fn default_dichotomy_labels() -> [String; 2] {
    ["high".to_string(), "low".to_string()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliError::Validation(format!("format must be json or csv, got {other:?}"))),
        }
    }
}

/// Everything a run depends on. Echoed verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Sample to evaluate; defaults to the learning sample.
    #[serde(default)]
    pub screening: Option<PathBuf>,
    pub columns: ColumnMapping,
    #[serde(default = "default_rule")]
    pub rule: RuleSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_tau", with = "covthresh::serde_ext::float")]
    pub tau: f64,
    /// Evaluate these raw thresholds instead of estimating a rule.
    #[serde(default, with = "covthresh::serde_ext::opt_float_vec")]
    pub raw_thresholds: Option<Vec<f64>>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: BootstrapOptions,
    #[serde(default = "default_simulate")]
    pub simulate: SimulationOptions,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_rule() -> RuleSpec {
    RuleSpec::Proportional
}

fn default_alpha() -> f64 {
    0.1
}

fn default_tau() -> f64 {
    f64::INFINITY
}

fn default_bootstrap() -> BootstrapOptions {
    BootstrapOptions::new(1000, 0)
}

fn default_simulate() -> SimulationOptions {
    SimulationOptions::new(10_000, 1000, 0)
}

impl RunConfig {
    pub fn new(input: PathBuf, x: String, z: String) -> Self {
        Self {
            input,
            screening: None,
            columns: ColumnMapping {
                x,
                z,
                y: None,
                dichotomize: None,
                dichotomize_labels: default_dichotomy_labels(),
                drop_nonpositive: Vec::new(),
                labels: None,
            },
            rule: default_rule(),
            alpha: default_alpha(),
            mode: Mode::default(),
            tau: default_tau(),
            raw_thresholds: None,
            bootstrap: default_bootstrap(),
            simulate: default_simulate(),
            format: OutputFormat::default(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if let Some(q) = self.columns.dichotomize {
            if !(q > 0.0 && q < 1.0) {
                return bad(format!("dichotomization quantile must lie in (0, 1), got {q}"));
            }
            let [hi, lo] = &self.columns.dichotomize_labels;
            if hi == lo {
                return bad("dichotomization labels must differ".into());
            }
        }
        if self.bootstrap.replicates < 2 {
            return bad(format!("bootstrap needs B >= 2, got {}", self.bootstrap.replicates));
        }
        if !(self.bootstrap.ci_level > 0.0 && self.bootstrap.ci_level < 1.0) {
            return bad(format!("ci level must lie in (0, 1), got {}", self.bootstrap.ci_level));
        }
        if self.simulate.population == 0 || self.simulate.replicates == 0 {
            return bad("simulation needs N >= 1 and B >= 1".into());
        }
        if !(self.simulate.bw_factor >= 0.0 && self.simulate.bw_factor.is_finite()) {
            return bad(format!("bandwidth factor must be >= 0, got {}", self.simulate.bw_factor));
        }
        if let Some(t) = &self.raw_thresholds {
            if t.iter().any(|v| v.is_nan()) {
                return bad("raw thresholds must not be NaN".into());
            }
        }
        Ok(())
    }
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse()
            .map_err(|_| CliError::Validation(format!("{what}: cannot parse {t:?} as a number"))),
    }
}

pub fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|v| parse_f64(v, what)).collect()
}

/// `key=value` pairs separated by `sep`.
fn key_values<'a>(body: &'a str, sep: char, kind: &str) -> CliResult<Vec<(&'a str, &'a str)>> {
    body.split(sep)
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::Validation(format!("{kind}: expected key=value, got {kv:?}")))
        })
        .collect()
}

/// Parses the compact rule syntax used on the command line:
///
/// ```text
/// proportional
/// constant
/// gamma:0.5
/// modified:k0=2,p_min=0.05[,p_max=0.1]
/// subprob:0.05,0.85
/// optimal:delta=4,4;sigma=1,1;beta_k=0.01,0.02[;beta=0.03][;c_star=1.674,1.946]
/// ```
pub fn parse_rule(s: &str) -> CliResult<RuleSpec> {
    let (kind, body) = match s.split_once(':') {
        Some((k, b)) => (k.trim(), b),
        None => (s.trim(), ""),
    };
    let need_body = |kind: &str| {
        if body.trim().is_empty() {
            Err(CliError::Validation(format!("rule {kind} needs parameters after ':'")))
        } else {
            Ok(())
        }
    };
    match kind {
        "proportional" => Ok(RuleSpec::Proportional),
        "constant" => Ok(RuleSpec::Constant),
        "gamma" => {
            need_body(kind)?;
            Ok(RuleSpec::Gamma {
                gamma: parse_f64(body, "gamma")?,
            })
        }
        "subprob" => {
            need_body(kind)?;
            Ok(RuleSpec::Subprobability {
                g: parse_list(body, "subprob")?,
            })
        }
        "modified" => {
            need_body(kind)?;
            let (mut k0, mut p_min, mut p_max) = (None, None, None);
            for (k, v) in key_values(body, ',', kind)? {
                match k {
                    "k0" => {
                        k0 = Some(v.parse::<usize>().map_err(|_| {
                            CliError::Validation(format!("modified: k0 must be a positive integer, got {v:?}"))
                        })?)
                    }
                    "p_min" => p_min = Some(parse_f64(v, "p_min")?),
                    "p_max" => p_max = Some(parse_f64(v, "p_max")?),
                    other => return Err(CliError::Validation(format!("modified: unknown key {other:?}"))),
                }
            }
            match (k0, p_min) {
                (Some(k0), Some(p_min)) => Ok(RuleSpec::Modified { k0, p_min, p_max }),
                _ => Err(CliError::Validation("modified rule needs k0 and p_min".into())),
            }
        }
        "optimal" => {
            need_body(kind)?;
            let (mut delta, mut sigma, mut beta, mut beta_k, mut c_star) = (None, None, None, None, None);
            for (k, v) in key_values(body, ';', kind)? {
                match k {
                    "delta" => delta = Some(parse_list(v, "delta")?),
                    "sigma" => sigma = Some(parse_list(v, "sigma")?),
                    "beta" => beta = Some(parse_f64(v, "beta")?),
                    "beta_k" => beta_k = Some(parse_list(v, "beta_k")?),
                    "c_star" => c_star = Some(parse_list(v, "c_star")?),
                    other => return Err(CliError::Validation(format!("optimal: unknown key {other:?}"))),
                }
            }
            let delta = delta.ok_or_else(|| CliError::Validation("optimal rule needs delta".into()))?;
            let sigma = sigma.unwrap_or_else(|| vec![1.0; delta.len()]);
            let alternative = AlternativeSpec::new(delta, sigma, beta, beta_k)?;
            Ok(RuleSpec::Optimal { alternative, c_star })
        }
        other => Err(CliError::Validation(format!(
            "unknown rule {other:?}; expected proportional, gamma, modified, subprob, constant or optimal"
        ))),
    }
}

pub fn parse_mode(s: &str) -> CliResult<Mode> {
    s.parse().map_err(|e: covthresh::Error| CliError::Validation(e.to_string()))
}
