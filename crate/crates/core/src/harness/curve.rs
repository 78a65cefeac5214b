use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trial::{run_trial, ExperimentContext, TrialOutcome, TrialResult};
use crate::error::Result;

/// Detection probability versus training length for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    /// Label of the swept value, e.g. `kappa=4,4`; `T` for a plain run.
    pub axis: String,
    /// `nnls`, `omp` or `bisection`.
    pub estimator: String,
    pub t: Vec<usize>,
    pub p_d: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Zero for analytic curves.
    pub trials: usize,
    pub config_hash: String,
    pub master_seed: u64,
    pub frame_ms: f64,
    /// Mean first-success slot; censored trials count as `T_max`.
    pub mean_detect_slots: Option<f64>,
    /// Fraction of trials without any success up to `T_max`.
    pub censored: Option<f64>,
}

impl CurveResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_p_d(&self) -> f64 {
        self.p_d.last().copied().unwrap_or(0.0)
    }
}

/// Binomial standard error `√(p(1-p)/trials)`.
pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Aggregate per-trial outcomes into a curve.
pub fn aggregate(outcomes: &[&TrialOutcome], config: &ExperimentConfig, axis: &str, estimator: &str) -> CurveResult {
    let trials = outcomes.len();
    let t_max = config.t_max;
    let mut p_d = Vec::with_capacity(t_max);
    let mut stderr = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let hits = outcomes.iter().filter(|o| o.success_at[t]).count();
        let p = hits as f64 / trials as f64;
        p_d.push(p);
        stderr.push(binomial_stderr(p, trials));
    }
    let censored = outcomes.iter().filter(|o| o.first_success.is_none()).count();
    let total: usize = outcomes.iter().map(|o| o.first_success.unwrap_or(t_max)).sum();
    CurveResult {
        axis: axis.to_string(),
        estimator: estimator.to_string(),
        t: (1..=t_max).collect(),
        p_d,
        stderr,
        trials,
        config_hash: config.config_hash(),
        master_seed: config.master_seed,
        frame_ms: config.frame_ms,
        mean_detect_slots: Some(total as f64 / trials as f64),
        censored: Some(censored as f64 / trials as f64),
    }
}

/// Run every trial of `config` in parallel; results are in trial order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let ctx = ExperimentContext::new(config)?;
    (0..config.trials as u64).into_par_iter().map(|t| run_trial(&ctx, t)).collect()
}

/// One curve per estimator enabled in `config`, NNLS first.
pub fn detection_curves(config: &ExperimentConfig, axis: &str) -> Result<Vec<CurveResult>> {
    let results = run_trials(config)?;
    let mut curves = Vec::new();
    if config.estimator.runs_nnls() {
        let outs: Vec<&TrialOutcome> = results.iter().filter_map(|r| r.nnls.as_ref()).collect();
        curves.push(aggregate(&outs, config, axis, "nnls"));
    }
    if config.estimator.runs_omp() {
        let outs: Vec<&TrialOutcome> = results.iter().filter_map(|r| r.omp.as_ref()).collect();
        curves.push(aggregate(&outs, config, axis, "omp"));
    }
    Ok(curves)
}

/// `P_D(T)` of the first enabled estimator.
pub fn detection_curve(config: &ExperimentConfig) -> Result<CurveResult> {
    Ok(detection_curves(config, "T")?.remove(0))
}
