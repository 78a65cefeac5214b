use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::curve::{detection_curves, CurveResult};
use crate::baselines::{bisection_curve, bisection_user_time};
use crate::error::{invalid_config, Result};

/// One parameter axis with the values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    CodebookSeed(Vec<u64>),
    /// `(κ_u, κ_v)`
    Kappa(Vec<(usize, usize)>),
    CombSize(Vec<usize>),
    /// `(m, n, κ_u, κ_v)`
    ChainsKappa(Vec<(usize, usize, usize, usize)>),
    UeChains(Vec<usize>),
    Alpha(Vec<f64>),
    /// Number of users `K`; adds the bisection curve next to the simulated one.
    Users(Vec<usize>),
    SnrDb(Vec<f64>),
}

pub const AXIS_NAMES: [&str; 8] =
    ["codebook_seed", "kappa", "comb_size", "chains_kappa", "ue_chains", "alpha", "users", "snr_bbf_db"];

fn parse_list<T: std::str::FromStr>(text: &str, sep: char) -> Result<Vec<T>> {
    text.split(sep)
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|_| invalid_config(format!("cannot parse `{v}`"))))
        .collect()
}

fn parse_tuple<const K: usize>(text: &str) -> Result<[usize; K]> {
    let v: Vec<usize> = parse_list(text, ',')?;
    v.try_into().map_err(|_| invalid_config(format!("`{text}` needs {K} comma-separated values")))
}

impl SweepAxis {
    /// Parse an axis name and its values. Scalars are comma separated,
    /// tuples are separated by `;` with comma-separated fields.
    pub fn parse(name: &str, values: &str) -> Result<Self> {
        let tuples = || values.split(';').map(str::trim).filter(|t| !t.is_empty());
        let axis = match name {
            "codebook_seed" => SweepAxis::CodebookSeed(parse_list(values, ',')?),
            "kappa" => SweepAxis::Kappa(
                tuples()
                    .map(|t| match parse_list::<usize>(t, ',')?.as_slice() {
                        [k] => Ok((*k, *k)),
                        [u, v] => Ok((*u, *v)),
                        _ => Err(invalid_config(format!("kappa value `{t}` must be `k` or `ku,kv`"))),
                    })
                    .collect::<Result<_>>()?,
            ),
            "comb_size" => SweepAxis::CombSize(parse_list(values, ',')?),
            "chains_kappa" => SweepAxis::ChainsKappa(
                tuples().map(|t| parse_tuple::<4>(t).map(|[a, b, c, d]| (a, b, c, d))).collect::<Result<_>>()?,
            ),
            "ue_chains" => SweepAxis::UeChains(parse_list(values, ',')?),
            "alpha" => SweepAxis::Alpha(parse_list(values, ',')?),
            "users" => SweepAxis::Users(parse_list(values, ',')?),
            "snr_bbf_db" => SweepAxis::SnrDb(parse_list(values, ',')?),
            _ => return Err(invalid_config(format!("unknown axis `{name}`; expected one of {}", AXIS_NAMES.join(", ")))),
        };
        if axis.is_empty() {
            return Err(invalid_config("sweep axis has no values"));
        }
        Ok(axis)
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::CodebookSeed(v) => v.len(),
            SweepAxis::Kappa(v) => v.len(),
            SweepAxis::CombSize(v) => v.len(),
            SweepAxis::ChainsKappa(v) => v.len(),
            SweepAxis::UeChains(v) => v.len(),
            SweepAxis::Alpha(v) => v.len(),
            SweepAxis::Users(v) => v.len(),
            SweepAxis::SnrDb(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The configuration and label of the `idx`-th axis value.
    pub fn apply(&self, base: &ExperimentConfig, idx: usize) -> (ExperimentConfig, String) {
        let mut cfg = base.clone();
        let mut label = String::new();
        match self {
            SweepAxis::CodebookSeed(v) => {
                cfg.codebook_seed = v[idx];
                let _ = write!(label, "codebook_seed={}", v[idx]);
            }
            SweepAxis::Kappa(v) => {
                (cfg.kappa_u, cfg.kappa_v) = v[idx];
                let _ = write!(label, "kappa={},{}", v[idx].0, v[idx].1);
            }
            SweepAxis::CombSize(v) => {
                cfg.comb_size = v[idx];
                let _ = write!(label, "comb_size={}", v[idx]);
            }
            SweepAxis::ChainsKappa(v) => {
                let (m, n, ku, kv) = v[idx];
                (cfg.bs_chains, cfg.ue_chains, cfg.kappa_u, cfg.kappa_v) = (m, n, ku, kv);
                let _ = write!(label, "m,n,kappa_u,kappa_v={m},{n},{ku},{kv}");
            }
            SweepAxis::UeChains(v) => {
                cfg.ue_chains = v[idx];
                let _ = write!(label, "ue_chains={}", v[idx]);
            }
            SweepAxis::Alpha(v) => {
                cfg.alpha = v[idx];
                let _ = write!(label, "alpha={}", v[idx]);
            }
            SweepAxis::Users(v) => {
                cfg.users = v[idx];
                let _ = write!(label, "users={}", v[idx]);
            }
            SweepAxis::SnrDb(v) => {
                cfg.snr_bbf_db = v[idx];
                let _ = write!(label, "snr_bbf_db={}", v[idx]);
            }
        }
        (cfg, label)
    }
}

/// Analytic `K(T)/K` of sequential bisection training for `config.users` users.
pub fn bisection_result(config: &ExperimentConfig, axis: &str) -> Result<CurveResult> {
    let model = config.bisection_model();
    let p_d = bisection_curve(&model, config.users, config.t_max)?;
    Ok(CurveResult {
        axis: axis.to_string(),
        estimator: "bisection".into(),
        t: (1..=config.t_max).collect(),
        stderr: vec![0.0; p_d.len()],
        p_d,
        trials: 0,
        config_hash: config.config_hash(),
        master_seed: config.master_seed,
        frame_ms: config.frame_ms,
        mean_detect_slots: Some((bisection_user_time(&model) * config.users) as f64),
        censored: None,
    })
}

/// One curve per axis value (and per estimator). All values share the master
/// seed, so channels and noise are common wherever dimensions allow.
pub fn sweep(base: &ExperimentConfig, axis: &SweepAxis) -> Result<Vec<CurveResult>> {
    let mut out = Vec::new();
    for idx in 0..axis.len() {
        let (cfg, label) = axis.apply(base, idx);
        cfg.validate().map_err(|e| invalid_config(format!("{label}: {e}")))?;
        out.extend(detection_curves(&cfg, &label)?);
        if matches!(axis, SweepAxis::Users(_)) {
            out.push(bisection_result(&cfg, &label)?);
        }
    }
    Ok(out)
}
