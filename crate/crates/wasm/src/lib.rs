//! Browser bindings: threshold rules, LP design and a small estimation run,
//! all under a standard normal `Psi`. Every export returns a JSON string.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use covthresh::design::{
    build_lp, predicted_power, solve_minority_greedy, solve_simplex, verify_conditions,
    AlternativeSpec, DesignTargets,
};
use covthresh::estimation::{estimate_rule, LabeledSample, Mode, RuleSpec};
use covthresh::rules::{
    check_admissibility, false_alarm_rate, gamma_proportional_thresholds,
    thresholds_from_subprobability,
};
use covthresh::{ClassDistribution, StandardNormal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal as Gauss;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn normalized(probs: Vec<f64>) -> covthresh::Result<ClassDistribution> {
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(covthresh::Error::InvalidParameter(
            "class weights must be nonnegative with a positive sum".into(),
        ));
    }
    ClassDistribution::from_probs(probs.iter().map(|p| p / total).collect())
}

pub fn proportional_value(probs: Vec<f64>, alpha: f64, gamma: f64) -> covthresh::Result<Value> {
    let dist = normalized(probs)?;
    let adm = check_admissibility(&dist, alpha, gamma)?;
    if !adm.admissible {
        return Ok(json!({
            "probs": dist.probs(),
            "admissible": false,
            "margins": adm.margins,
            "offending": adm.offending,
        }));
    }
    let psi = StandardNormal::new();
    let ts = gamma_proportional_thresholds(&dist, gamma, alpha, &psi)?;
    let g = ts.subprobability(&dist)?;
    Ok(json!({
        "probs": dist.probs(),
        "admissible": true,
        "margins": adm.margins,
        "levels": ts.levels,
        "thresholds": ts.standardized,
        "g": g.values(),
        "false_alarm": false_alarm_rate(&ts, &dist, &psi)?,
    }))
}

pub fn optimal_value(
    probs: Vec<f64>,
    alpha: f64,
    delta: Vec<f64>,
    sigma: Vec<f64>,
    beta_k: Vec<f64>,
) -> covthresh::Result<Value> {
    let dist = normalized(probs)?;
    let psi = StandardNormal::new();
    let alt = AlternativeSpec::new(delta, sigma, None, Some(beta_k))?;
    alt.validate(dist.len())?;
    let targets = DesignTargets::from_alternative(&alt, &psi)?;
    let cut = targets.lp_cutoffs().unwrap_or_default();
    let lp = build_lp(&dist, alpha, cut, &psi)?;
    let greedy = solve_minority_greedy(&lp)?;
    let simplex = solve_simplex(&lp)?;
    let ts = thresholds_from_subprobability(&greedy, &dist, &psi)?;
    let power = predicted_power(&ts, &alt, &dist, &psi)?;
    let check = verify_conditions(&ts, &targets, &dist, alpha, &psi)?;
    let proportional = match gamma_proportional_thresholds(&dist, 1.0, alpha, &psi) {
        Ok(p) => json!({
            "thresholds": p.standardized,
            "g": p.subprobability(&dist)?.values(),
            "power": predicted_power(&p, &alt, &dist, &psi)?,
        }),
        Err(e) if e.is_infeasible() => Value::Null,
        Err(e) => return Err(e),
    };
    Ok(json!({
        "probs": dist.probs(),
        "c_star": cut,
        "b": lp.upper_bounds(),
        "greedy": greedy.values(),
        "simplex": simplex.values(),
        "thresholds": ts.standardized,
        "power": power,
        "all_conditions_hold": check.all_passed,
        "proportional": proportional,
    }))
}

pub fn estimate_value(n: usize, p_minor: f64, alpha: f64, seed: u64) -> covthresh::Result<Value> {
    if !(p_minor > 0.0 && p_minor < 1.0) {
        return Err(covthresh::Error::InvalidParameter(format!(
            "minority share must lie in (0, 1), got {p_minor}"
        )));
    }
    let probs = [p_minor, 1.0 - p_minor];
    let (loc, scale) = ([135.0, 121.0], [31.0, 30.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut class = Vec::with_capacity(n);
    for _ in 0..n {
        let k = usize::from(rng.random::<f64>() >= p_minor);
        class.push(k);
        x.push(loc[k] + scale[k] * rng.sample::<f64, _>(Gauss));
    }
    let labels = vec!["minority".to_string(), "majority".to_string()];
    let sample = LabeledSample::new(labels, x, class, None)?;
    let rule = estimate_rule(&sample, &RuleSpec::Proportional, Mode::Conditional, f64::INFINITY, alpha)?;
    let truth = gamma_proportional_thresholds(&ClassDistribution::from_probs(probs.to_vec())?, 1.0, alpha, &StandardNormal::new())?;
    Ok(json!({
        "n": n,
        "counts": sample.counts(),
        "estimated": rule.thresholds.standardized,
        "analytic": truth.standardized,
        "raw": rule.raw(),
        "location": rule.model.location,
        "scale": rule.model.scale,
    }))
}

fn finish(v: covthresh::Result<Value>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Proportional (gamma) thresholds with admissibility margins.
#[wasm_bindgen]
pub fn proportional(probs: Vec<f64>, alpha: f64, gamma: f64) -> Result<String, JsError> {
    finish(proportional_value(probs, alpha, gamma))
}

/// Minority-optimal LP design for a shift/scale alternative with per-class budgets.
#[wasm_bindgen]
pub fn optimal(
    probs: Vec<f64>,
    alpha: f64,
    delta: Vec<f64>,
    sigma: Vec<f64>,
    beta_k: Vec<f64>,
) -> Result<String, JsError> {
    finish(optimal_value(probs, alpha, delta, sigma, beta_k))
}

/// Estimates the proportional rule on a seeded two-class normal sample.
#[wasm_bindgen]
pub fn estimate(n: usize, p_minor: f64, alpha: f64, seed: u32) -> Result<String, JsError> {
    finish(estimate_value(n, p_minor, alpha, u64::from(seed)))
}
