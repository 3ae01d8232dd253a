use std::fmt;
use std::str::FromStr;

use covthresh::design::{
    build_lp, predicted_power, solve_minority_greedy, solve_simplex, verify_conditions,
    DesignReport, DesignTargets, LpInstance, PowerReport,
};
use covthresh::estimation::{EstimatedRule, LabeledSample, LearningFit, RuleSpec};
use covthresh::evaluation::{
    alarm_summary, apply_raw, apply_standardized, apply_thresholds, contingency, EvaluationReport,
};
use covthresh::resampling::{
    bootstrap_thresholds, smoothed_screening_sim, BootstrapReport, ScreeningSimReport,
};
use covthresh::rules::{gamma_proportional_thresholds, SubProbabilityVector, ThresholdSet};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, IngestSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Thresholds,
    Optimal,
    Evaluate,
    Bootstrap,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Thresholds => "thresholds",
            Command::Optimal => "optimal",
            Command::Evaluate => "evaluate",
            Command::Bootstrap => "bootstrap",
            Command::Simulate => "simulate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        [
            Command::Thresholds,
            Command::Optimal,
            Command::Evaluate,
            Command::Bootstrap,
            Command::Simulate,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| CliError::Validation(format!("unknown command {s:?}")))
    }
}

/// The proportional rule checked against the same design targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalComparison {
    pub thresholds: ThresholdSet,
    pub g: SubProbabilityVector,
    pub design_check: DesignReport,
    pub power: PowerReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalReport {
    /// The designed rule, built from the greedy solution.
    pub rule: EstimatedRule,
    pub targets: DesignTargets,
    pub lp: LpInstance,
    pub greedy: SubProbabilityVector,
    pub simplex: SubProbabilityVector,
    /// `|d . g_greedy - d . g_simplex|`.
    pub objective_gap: f64,
    pub design_check: DesignReport,
    pub power: PowerReport,
    /// Marginal power guaranteed when every per-class power condition holds, `sum_k p_k (1 - beta_k)`.
    #[serde(default)]
    pub power_bound: Option<f64>,
    /// `None` when the proportional rule is inadmissible for this sample.
    #[serde(default)]
    pub proportional: Option<ProportionalComparison>,
}

impl OptimalReport {
    pub fn validate(&self) -> covthresh::Result<()> {
        self.rule.validate()?;
        self.greedy.validate(&self.rule.dist)?;
        self.simplex.validate(&self.rule.dist)?;
        if self.lp.max_violation(self.greedy.values()) > 1e-9 {
            return Err(covthresh::Error::InvariantViolation("greedy solution violates the LP".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub labels: Vec<String>,
    /// The estimated rule; absent when raw thresholds were given.
    #[serde(default)]
    pub rule: Option<EstimatedRule>,
    #[serde(with = "covthresh::serde_ext::float_vec")]
    pub raw_thresholds: Vec<f64>,
    /// Records where raw-scale and standardized-scale decisions differ.
    #[serde(default)]
    pub disagreements: Option<usize>,
    pub report: EvaluationReport,
}

impl EvaluationOutput {
    pub fn validate(&self) -> covthresh::Result<()> {
        if let Some(r) = &self.rule {
            r.validate()?;
        }
        self.report.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Thresholds(Box<EstimatedRule>),
    Optimal(Box<OptimalReport>),
    Evaluate(Box<EvaluationOutput>),
    Bootstrap(Box<BootstrapReport>),
    Simulate(Box<ScreeningSimReport>),
}

/// Self-describing output of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub ingest: Vec<IngestSummary>,
    pub result: T,
}

fn optimal(fit: &LearningFit, config: &RunConfig) -> CliResult<OptimalReport> {
    let RuleSpec::Optimal { alternative, c_star } = &config.rule else {
        return Err(CliError::Validation(
            "the optimal command needs --rule optimal:delta=..;sigma=..;beta_k=..".into(),
        ));
    };
    let targets = fit.resolve_targets(alternative, c_star.as_deref())?;
    let cut = targets.lp_cutoffs().expect("validated alternative carries a budget");
    let lp = build_lp(&fit.dist, config.alpha, cut, &fit.psi)?;
    let greedy = solve_minority_greedy(&lp)?;
    let simplex = solve_simplex(&lp)?;
    let objective_gap = (lp.objective(greedy.values()) - lp.objective(simplex.values())).abs();
    let rule = fit.estimate(&config.rule, config.alpha)?;
    let design_check = verify_conditions(&rule.thresholds, &targets, &fit.dist, config.alpha, &fit.psi)?;
    let power = predicted_power(&rule.thresholds, alternative, &fit.dist, &fit.psi)?;
    let power_bound = alternative.beta_k.as_ref().map(|bk| {
        fit.dist.probs().iter().zip(bk).map(|(p, b)| p * (1.0 - b)).sum()
    });
    let proportional = match gamma_proportional_thresholds(&fit.dist, 1.0, config.alpha, &fit.psi) {
        Ok(thresholds) => Some(ProportionalComparison {
            g: thresholds.subprobability(&fit.dist)?,
            design_check: verify_conditions(&thresholds, &targets, &fit.dist, config.alpha, &fit.psi)?,
            power: predicted_power(&thresholds, alternative, &fit.dist, &fit.psi)?,
            thresholds,
        }),
        Err(e) if e.is_infeasible() => None,
        Err(e) => return Err(e.into()),
    };
    Ok(OptimalReport {
        rule,
        targets,
        lp,
        greedy,
        simplex,
        objective_gap,
        design_check,
        power,
        power_bound,
        proportional,
    })
}

fn evaluate(
    learning: &LabeledSample,
    screening: &LabeledSample,
    config: &RunConfig,
) -> CliResult<EvaluationOutput> {
    let labels = learning.labels().to_vec();
    let (rule, raw, flags, disagreements) = match &config.raw_thresholds {
        Some(raw) => {
            let flags = apply_raw(screening, &labels, raw)?;
            (None, raw.clone(), flags, None)
        }
        None => {
            let fit = LearningFit::new(learning, config.mode, config.tau)?;
            let rule = fit.estimate(&config.rule, config.alpha)?;
            let flags = apply_thresholds(screening, &rule)?;
            let std_flags = apply_standardized(screening, &rule)?;
            let differ = flags.iter().zip(&std_flags).filter(|(a, b)| a != b).count();
            let raw = rule.raw().to_vec();
            (Some(rule), raw, flags, Some(differ))
        }
    };
    let report = if screening.y().is_some() {
        contingency(&flags, screening)?
    } else {
        alarm_summary(&flags, screening)?
    };
    Ok(EvaluationOutput {
        labels,
        rule,
        raw_thresholds: raw,
        disagreements,
        report,
    })
}

/// Runs one command and returns the ingest accounting with the result.
pub fn run(command: Command, config: &RunConfig) -> CliResult<(Vec<IngestSummary>, Outcome)> {
    config.validate()?;
    let (sample, summary) = ingest(&config.input, &config.columns, None)?;
    let mut summaries = vec![summary];
    let outcome = match command {
        Command::Thresholds => {
            let fit = LearningFit::new(&sample, config.mode, config.tau)?;
            Outcome::Thresholds(Box::new(fit.estimate(&config.rule, config.alpha)?))
        }
        Command::Optimal => {
            let fit = LearningFit::new(&sample, config.mode, config.tau)?;
            Outcome::Optimal(Box::new(optimal(&fit, config)?))
        }
        Command::Evaluate => {
            let screening = match &config.screening {
                Some(path) => {
                    let (s, summary) = ingest(path, &config.columns, summaries[0].dichotomy_cutoff)?;
                    summaries.push(summary);
                    s
                }
                None => sample.clone(),
            };
            Outcome::Evaluate(Box::new(evaluate(&sample, &screening, config)?))
        }
        Command::Bootstrap => Outcome::Bootstrap(Box::new(bootstrap_thresholds(
            &sample,
            &config.rule,
            config.mode,
            config.tau,
            config.alpha,
            &config.bootstrap,
        )?)),
        Command::Simulate => Outcome::Simulate(Box::new(smoothed_screening_sim(
            &sample,
            &config.rule,
            config.mode,
            config.tau,
            config.alpha,
            &config.simulate,
        )?)),
    };
    Ok((summaries, outcome))
}

pub fn report(command: Command, config: &RunConfig, ingest: Vec<IngestSummary>, result: Outcome) -> Report<Outcome> {
    Report {
        schema_version: SCHEMA_VERSION,
        command,
        config: config.clone(),
        ingest,
        result,
    }
}
