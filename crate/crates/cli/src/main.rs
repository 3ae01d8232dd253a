use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covthresh::resampling::SmoothingScale;
use covthresh_cli::commands::{report, run, Command};
use covthresh_cli::config::{parse_list, parse_mode, parse_rule, OutputFormat, RunConfig};
use covthresh_cli::output::{to_csv, to_json};
use covthresh_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "covthresh", version, about = "Covariate-adaptive alarm thresholds for imbalanced screening")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate per-class thresholds from a learning sample
    Thresholds(Common),
    /// Solve the LP design for an alternative and check the design conditions
    Optimal(Common),
    /// Apply a rule to a screening sample and tabulate alarms
    Evaluate(EvaluateArgs),
    /// Bootstrap standard errors and percentile intervals of the thresholds
    Bootstrap(BootstrapArgs),
    /// Smoothed-bootstrap screening simulation
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags given alongside override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Learning sample (delimited text with a header row)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Measurement column
    #[arg(long)]
    x: Option<String>,
    /// Class column
    #[arg(long)]
    z: Option<String>,
    /// Outcome column (0/1) for contingency tables
    #[arg(long)]
    y: Option<String>,
    /// Split a numeric class column at this quantile into high/low
    #[arg(long)]
    dichotomize: Option<f64>,
    /// Names of the high and low classes, e.g. HBMI,No-HBMI
    #[arg(long, value_delimiter = ',')]
    dichotomize_labels: Option<Vec<String>>,
    /// Drop rows with a non-positive value in any of these columns
    #[arg(long, value_delimiter = ',')]
    drop_nonpositive: Option<Vec<String>>,
    /// Declared class labels, in order
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// proportional | constant | gamma:G | modified:k0=K,p_min=P[,p_max=Q] | subprob:G1,G2,.. |
    /// optimal:delta=..;sigma=..;beta_k=..[;beta=B][;c_star=..]
    #[arg(long)]
    rule: Option<String>,
    /// Overall false alarm budget
    #[arg(long)]
    alpha: Option<f64>,
    /// marginal | conditional standardization
    #[arg(long)]
    mode: Option<String>,
    /// Truncation constant for the moment estimates (inf disables)
    #[arg(long)]
    tau: Option<String>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Sample to screen; defaults to the learning sample
    #[arg(long)]
    screening: Option<PathBuf>,
    /// Evaluate these raw thresholds (one per class) instead of estimating
    #[arg(long)]
    raw_thresholds: Option<String>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    common: Common,
    /// Number of replicates
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Percentile interval level
    #[arg(long)]
    ci: Option<f64>,
    /// Keep the replicate matrix in the report
    #[arg(long)]
    retain_replicates: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Size of each simulated screening population
    #[arg(long)]
    n_pop: Option<usize>,
    /// Number of replicates
    #[arg(long)]
    b: Option<usize>,
    /// Noise sd is bw_factor * s * N^(-1/5)
    #[arg(long)]
    bw_factor: Option<f64>,
    /// class | marginal standard deviation for the noise
    #[arg(long)]
    smoothing: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_tau(s: &str) -> CliResult<f64> {
    parse_list(s, "tau")?
        .first()
        .copied()
        .ok_or_else(|| CliError::Validation("tau needs a value".into()))
}

fn resolve(c: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => {
            let missing = |what: &str| CliError::Validation(format!("--{what} is required without --config"));
            RunConfig::new(
                c.input.clone().ok_or_else(|| missing("input"))?,
                c.x.clone().ok_or_else(|| missing("x"))?,
                c.z.clone().ok_or_else(|| missing("z"))?,
            )
        }
    };
    if let Some(v) = &c.input {
        cfg.input = v.clone();
    }
    if let Some(v) = &c.x {
        cfg.columns.x = v.clone();
    }
    if let Some(v) = &c.z {
        cfg.columns.z = v.clone();
    }
    if c.y.is_some() {
        cfg.columns.y = c.y.clone();
    }
    if c.dichotomize.is_some() {
        cfg.columns.dichotomize = c.dichotomize;
    }
    if let Some(v) = &c.dichotomize_labels {
        let [high, low] = v.as_slice() else {
            return Err(CliError::Validation(format!(
                "--dichotomize-labels needs exactly two names, got {}",
                v.len()
            )));
        };
        cfg.columns.dichotomize_labels = [high.clone(), low.clone()];
    }
    if let Some(v) = &c.drop_nonpositive {
        cfg.columns.drop_nonpositive = v.clone();
    }
    if c.labels.is_some() {
        cfg.columns.labels = c.labels.clone();
    }
    if let Some(v) = &c.rule {
        cfg.rule = parse_rule(v)?;
    }
    if let Some(v) = c.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &c.mode {
        cfg.mode = parse_mode(v)?;
    }
    if let Some(v) = &c.tau {
        cfg.tau = parse_tau(v)?;
    }
    if let Some(v) = &c.format {
        cfg.format = v.parse::<OutputFormat>()?;
    }
    Ok(cfg)
}

fn build(cmd: &Cmd) -> CliResult<(Command, RunConfig, Option<PathBuf>)> {
    let (command, common) = match cmd {
        Cmd::Thresholds(c) => (Command::Thresholds, c),
        Cmd::Optimal(c) => (Command::Optimal, c),
        Cmd::Evaluate(a) => (Command::Evaluate, &a.common),
        Cmd::Bootstrap(a) => (Command::Bootstrap, &a.common),
        Cmd::Simulate(a) => (Command::Simulate, &a.common),
    };
    let mut cfg = resolve(common)?;
    match cmd {
        Cmd::Evaluate(a) => {
            if a.screening.is_some() {
                cfg.screening = a.screening.clone();
            }
            if let Some(v) = &a.raw_thresholds {
                cfg.raw_thresholds = Some(parse_list(v, "raw thresholds")?);
            }
        }
        Cmd::Bootstrap(a) => {
            if let Some(v) = a.b {
                cfg.bootstrap.replicates = v;
            }
            if let Some(v) = a.seed {
                cfg.bootstrap.seed = v;
            }
            if let Some(v) = a.ci {
                cfg.bootstrap.ci_level = v;
            }
            cfg.bootstrap.retain_replicates |= a.retain_replicates;
        }
        Cmd::Simulate(a) => {
            if let Some(v) = a.n_pop {
                cfg.simulate.population = v;
            }
            if let Some(v) = a.b {
                cfg.simulate.replicates = v;
            }
            if let Some(v) = a.bw_factor {
                cfg.simulate.bw_factor = v;
            }
            if let Some(v) = &a.smoothing {
                cfg.simulate.smoothing = Some(
                    v.parse::<SmoothingScale>()
                        .map_err(|e| CliError::Validation(e.to_string()))?,
                );
            }
            if let Some(v) = a.seed {
                cfg.simulate.seed = v;
            }
        }
        Cmd::Thresholds(_) | Cmd::Optimal(_) => {}
    }
    Ok((command, cfg, common.output.clone()))
}

fn execute(cli: &Cli) -> CliResult<()> {
    let (command, cfg, output) = build(&cli.command)?;
    let (ingest, outcome) = run(command, &cfg)?;
    let rep = report(command, &cfg, ingest, outcome);
    let text = match cfg.format {
        OutputFormat::Json => to_json(&rep)? + "\n",
        OutputFormat::Csv => to_csv(&rep)?,
    };
    match output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
