use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OmpMode, OmpSubcarriers};
use super::seeds::{channel_seed, trial_rng, Purpose};
use crate::array::BeamspaceIndex;
use crate::baselines::{measurement_row, omp_beam_align, ComplexMeasurementSet};
use crate::channel::{init_fading, GaussMarkovParams, MpcSet};
use crate::codebook::{generate_codebook, Codebook, Side, SupportSet};
use crate::error::Result;
use crate::estimate::{detect_strongest, nnls_normal, NnlsOptions, NormalEquations};
use crate::measure::{synthesize_slot, Numerology, PowerConfig, SlotContext};

/// Per-trial record of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Entry `T-1`: the strongest estimate after `T` slots hit the true bin.
    pub success_at: Vec<bool>,
    /// Smallest `T` with a correct estimate.
    pub first_success: Option<usize>,
    /// KKT residual for NNLS, final residual norm for OMP.
    pub residual: Vec<f64>,
    pub margin: Vec<f64>,
}

impl TrialOutcome {
    fn with_capacity(t_max: usize) -> Self {
        Self {
            success_at: Vec::with_capacity(t_max),
            first_success: None,
            residual: Vec::with_capacity(t_max),
            margin: Vec::with_capacity(t_max),
        }
    }

    fn record(&mut self, success: bool, residual: f64, margin: f64) {
        self.success_at.push(success);
        if success && self.first_success.is_none() {
            self.first_success = Some(self.success_at.len());
        }
        self.residual.push(residual);
        self.margin.push(margin);
    }
}

/// All estimators evaluated on one channel and noise realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub truth: BeamspaceIndex,
    pub nnls: Option<TrialOutcome>,
    pub omp: Option<TrialOutcome>,
}

/// Trial-independent state: validated config and the broadcast BS codebook.
#[derive(Debug, Clone)]
pub struct ExperimentContext {
    pub config: ExperimentConfig,
    pub numerology: Numerology,
    pub bs_codebook: Codebook,
    pub fading: GaussMarkovParams,
    pub nnls: NnlsOptions,
}

impl ExperimentContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let bs_codebook = generate_codebook(
            config.codebook_seed,
            config.t_max,
            config.bs_chains,
            config.bs_antennas,
            config.kappa_u,
            Side::Bs,
        )?;
        Ok(Self {
            config: config.clone(),
            numerology: config.numerology(),
            bs_codebook,
            fading: config.gauss_markov()?,
            nnls: NnlsOptions::default(),
        })
    }
}

/// Simulate `T_max` beacon slots for one user and evaluate every estimator
/// after each slot.
pub fn run_trial(ctx: &ExperimentContext, trial: u64) -> Result<TrialResult> {
    let cfg = &ctx.config;
    let (bs, ue) = (cfg.bs_size(), cfg.ue_size());
    let (m, n) = (cfg.bs_chains, cfg.ue_chains);
    let seed = channel_seed(cfg);

    let mut geometry = trial_rng(seed, trial, Purpose::Geometry);
    let mpcs = MpcSet::random(&cfg.path_gains, cfg.on_grid, bs, ue, cfg.max_delay_s, &mut geometry)?;
    let truth = mpcs.ground_truth(bs, ue);
    let truth_flat = truth.flatten(ue);

    let ue_seed: u64 = trial_rng(seed, trial, Purpose::UeCodebook).random();
    let ue_codebook = generate_codebook(ue_seed, cfg.t_max, n, cfg.ue_antennas, cfg.kappa_v, Side::Ue)?;

    let power = PowerConfig::from_snr(cfg.snr_bbf_linear(), cfg.noise_var, &ctx.numerology, m, mpcs.total_power())?;
    let path_coeffs = mpcs.beamspace(bs, ue);
    let slot_ctx = SlotContext {
        mpcs: &mpcs,
        path_coeffs: &path_coeffs,
        numerology: &ctx.numerology,
        power: &power,
        ue_chains: n,
    };

    let mut fading_rng = trial_rng(seed, trial, Purpose::Fading);
    let mut noise_rng = trial_rng(seed, trial, Purpose::Noise);
    let mut fading = init_fading(&mpcs, m, cfg.comb_size, &mut fading_rng)?;

    let cols = bs.get() * ue.get();
    let run_nnls = cfg.estimator.runs_nnls();
    let run_omp = cfg.estimator.runs_omp();
    let mut normal = NormalEquations::new(cols);
    let mut warm: Option<DVector<f64>> = None;
    let omp_subs = match cfg.omp_subcarriers {
        OmpSubcarriers::All => cfg.comb_size,
        OmpSubcarriers::One => 1,
    };
    let n_groups = match cfg.omp_mode {
        OmpMode::Stacked => 1,
        OmpMode::Joint => m * omp_subs,
    };
    let mut groups = if run_omp { vec![ComplexMeasurementSet::new(cols); n_groups] } else { Vec::new() };
    let mut nnls_out = run_nnls.then(|| TrialOutcome::with_capacity(cfg.t_max));
    let mut omp_out = run_omp.then(|| TrialOutcome::with_capacity(cfg.t_max));
    let mut ones = Vec::with_capacity(cfg.kappa_u * cfg.kappa_v);

    for s in 0..cfg.t_max {
        if s > 0 {
            fading.step(ctx.fading, &mut fading_rng);
        }
        let bs_sup: Vec<&SupportSet> = (0..m).map(|i| ctx.bs_codebook.support(s, i)).collect();
        let ue_sup: Vec<&SupportSet> = (0..n).map(|j| ue_codebook.support(s, j)).collect();
        let obs = synthesize_slot(&slot_ctx, &fading, &bs_sup, &ue_sup, &mut noise_rng);

        if let Some(out) = nnls_out.as_mut() {
            for (i, u) in bs_sup.iter().enumerate() {
                for (j, v) in ue_sup.iter().enumerate() {
                    ones.clear();
                    for &c in u.indices() {
                        ones.extend(v.indices().iter().map(|&r| c * ue.get() + r));
                    }
                    normal.push_binary_row(&ones, obs.powers[i * n + j] - cfg.noise_var);
                }
            }
            let sol = nnls_normal(&normal, &ctx.nnls, warm.as_ref())?;
            let det = detect_strongest(&sol.gamma, ue)?;
            out.record(!det.degenerate && det.flat_index == truth_flat, sol.kkt_residual, det.margin);
            warm = Some(sol.gamma);
        }

        if let Some(out) = omp_out.as_mut() {
            for (i, u) in bs_sup.iter().enumerate() {
                for (j, v) in ue_sup.iter().enumerate() {
                    let row = measurement_row(u, v, power.p_dim, n);
                    for k in 0..omp_subs {
                        let y = obs.coherent[(i * n + j) * cfg.comb_size + k];
                        groups[(i * omp_subs + k) % n_groups].push(row.clone(), y)?;
                    }
                }
            }
            let (det, residual) = omp_beam_align(&groups, mpcs.len(), ue)?;
            out.record(!det.degenerate && det.flat_index == truth_flat, residual, det.margin);
        }
    }
    Ok(TrialResult { truth, nnls: nnls_out, omp: omp_out })
}
