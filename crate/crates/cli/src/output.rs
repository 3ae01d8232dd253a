use covthresh::evaluation::ClassEvaluation;

use crate::commands::{Outcome, Report};
use crate::error::{CliError, CliResult};

/// Six significant digits, plain notation where it stays short.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

pub fn to_json(report: &Report<Outcome>) -> CliResult<String> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Validation(format!("cannot encode report: {e}")))
}

fn eval_row(w: &mut csv::Writer<Vec<u8>>, c: &ClassEvaluation) -> csv::Result<()> {
    let counts = c.counts.map(|t| [t.tp, t.fn_, t.fp, t.tn].map(|v| v.to_string()));
    let [tp, fn_, fp, tn] = counts.unwrap_or_default();
    w.write_record([
        c.class.clone(),
        c.n.to_string(),
        c.alarms.to_string(),
        opt(c.alarm_rate),
        tp,
        fn_,
        fp,
        tn,
        opt(c.tpr),
        opt(c.tnr),
    ])
}

/// Tabular per-class section of a report.
pub fn to_csv(report: &Report<Outcome>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let res: csv::Result<()> = (|| {
        match &report.result {
            Outcome::Thresholds(r) => {
                w.write_record(["class", "p", "level", "g", "standardized", "raw"])?;
                for k in 0..r.dist.len() {
                    let p = r.dist.probs()[k];
                    let q = r.thresholds.levels[k];
                    w.write_record([
                        r.dist.labels()[k].clone(),
                        sig6(p),
                        sig6(q),
                        sig6(p * q),
                        sig6(r.thresholds.standardized[k]),
                        sig6(r.raw()[k]),
                    ])?;
                }
            }
            Outcome::Optimal(o) => {
                w.write_record(["class", "p", "c_star", "b", "g_greedy", "g_simplex", "standardized", "raw", "power"])?;
                let cut = o.targets.lp_cutoffs().unwrap_or_default();
                for k in 0..o.rule.dist.len() {
                    w.write_record([
                        o.rule.dist.labels()[k].clone(),
                        sig6(o.rule.dist.probs()[k]),
                        cut.get(k).copied().map(sig6).unwrap_or_default(),
                        sig6(o.lp.upper_bounds()[k]),
                        sig6(o.greedy.values()[k]),
                        sig6(o.simplex.values()[k]),
                        sig6(o.rule.thresholds.standardized[k]),
                        sig6(o.rule.raw()[k]),
                        sig6(o.power.conditional[k]),
                    ])?;
                }
            }
            Outcome::Evaluate(e) => {
                w.write_record(["class", "n", "alarms", "alarm_rate", "tp", "fn", "fp", "tn", "tpr", "tnr"])?;
                for c in e.report.classes.iter().chain([&e.report.overall]) {
                    eval_row(&mut w, c)?;
                }
            }
            Outcome::Bootstrap(b) => {
                w.write_record(["class", "estimate", "mean", "se", "lower", "upper", "raw_estimate", "raw_se"])?;
                for k in 0..b.labels.len() {
                    w.write_record([
                        b.labels[k].clone(),
                        sig6(b.estimate.thresholds.standardized[k]),
                        sig6(b.standardized.mean[k]),
                        sig6(b.standardized.se[k]),
                        sig6(b.standardized.lower[k]),
                        sig6(b.standardized.upper[k]),
                        sig6(b.estimate.raw()[k]),
                        sig6(b.raw.se[k]),
                    ])?;
                }
            }
            Outcome::Simulate(s) => {
                w.write_record(["class", "alarm_rate", "replicates", "bandwidth"])?;
                for k in 0..s.labels.len() {
                    w.write_record([
                        s.labels[k].clone(),
                        opt(s.class_rates[k]),
                        s.class_replicates[k].to_string(),
                        sig6(s.bandwidth[k]),
                    ])?;
                }
                w.write_record([
                    "overall".to_string(),
                    sig6(s.marginal_rate),
                    s.replicates.to_string(),
                    String::new(),
                ])?;
            }
        }
        Ok(())
    })();
    res.map_err(|e| CliError::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}
