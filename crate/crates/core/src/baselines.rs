//! Reference schemes the statistics-based estimator is compared against.
//!
//! - Orthogonal matching pursuit on the complex per-subcarrier observations,
//!   which assumes the instantaneous channel stays fixed while measurements
//!   are collected.
//! - An overhead model of interactive bisection beam search, where each user
//!   is trained separately over `⌈log₂ max(M, N)⌉` probe/feedback rounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::array::ArraySize;
use crate::codebook::SupportSet;
use crate::error::{invalid_config, invalid_input, Result};
use crate::estimate::DetectionResult;
use crate::C64;

/// Rows `√(P_dim/n) g^H` and the matching complex observations for one
/// channel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMeasurementSet {
    rows: Vec<DVector<C64>>,
    observations: Vec<C64>,
    cols: usize,
}

impl ComplexMeasurementSet {
    pub fn new(cols: usize) -> Self {
        Self { rows: Vec::new(), observations: Vec::new(), cols }
    }

    pub fn push(&mut self, row: DVector<C64>, observation: C64) -> Result<()> {
        if row.len() != self.cols {
            return Err(invalid_input("measurement row has the wrong length"));
        }
        self.rows.push(row);
        self.observations.push(observation);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dictionary `A` with one row per measurement.
    pub fn matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows.len(), self.cols, |r, c| self.rows[r][c])
    }

    pub fn observations(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.observations)
    }
}

/// Measurement row `√(P_dim/n) (ǔ^T ⊗ v̌^H)` for binary-support beams.
pub fn measurement_row(bs_support: &SupportSet, ue_support: &SupportSet, p_dim: f64, ue_chains: usize) -> DVector<C64> {
    let n = ue_support.dimension();
    let w = (p_dim / ue_chains as f64).sqrt() / ((bs_support.len() * ue_support.len()) as f64).sqrt();
    let mut row = DVector::from_element(bs_support.dimension() * n, C64::new(0.0, 0.0));
    for &c in bs_support.indices() {
        for &r in ue_support.indices() {
            row[c * n + r] = C64::new(w, 0.0);
        }
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Selected flat beamspace indices in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients of each group on the support, `[group][k]`.
    pub coefficients: Vec<Vec<C64>>,
    /// Total residual norm after each iteration.
    pub residual_norms: Vec<f64>,
}

impl OmpResult {
    /// Support entry with the largest coefficient energy summed over groups.
    pub fn strongest(&self) -> Option<(usize, f64)> {
        (0..self.support.len())
            .map(|k| (self.support[k], self.coefficients.iter().map(|c| c[k].norm_sqr()).sum::<f64>()))
            .fold(None, |best, cand| match best {
                Some((_, e)) if e >= cand.1 => best,
                _ => Some(cand),
            })
    }
}

/// Orthogonal matching pursuit on a single measurement set.
pub fn omp_estimate(measurements: &ComplexMeasurementSet, sparsity: usize) -> Result<OmpResult> {
    simultaneous_omp(std::slice::from_ref(measurements), sparsity)
}

/// OMP over several measurement sets whose unknown vectors share a support
/// but not their values. With one set this is textbook OMP.
///
/// Atoms are normalized before correlating; the atom maximizing the summed
/// squared correlation against all residuals enters, then every set is
/// re-fitted by least squares on the selected atoms.
pub fn simultaneous_omp(groups: &[ComplexMeasurementSet], sparsity: usize) -> Result<OmpResult> {
    if sparsity == 0 {
        return Err(invalid_config("OMP sparsity must be at least 1"));
    }
    if groups.is_empty() {
        return Err(invalid_input("OMP needs at least one measurement set"));
    }
    let cols = groups[0].cols();
    if groups.iter().any(|g| g.cols() != cols) {
        return Err(invalid_input("measurement sets disagree on the dictionary size"));
    }
    let min_rows = groups.iter().map(|g| g.len()).min().unwrap_or(0);
    if sparsity > min_rows {
        return Err(invalid_config(format!("sparsity {sparsity} exceeds the {min_rows} available measurements")));
    }
    if sparsity > cols {
        return Err(invalid_config("sparsity exceeds the dictionary size"));
    }

    let mats: Vec<DMatrix<C64>> = groups.iter().map(|g| g.matrix()).collect();
    let ys: Vec<DVector<C64>> = groups.iter().map(|g| g.observations()).collect();
    let mut col_norm = vec![0.0f64; cols];
    for a in &mats {
        for (c, n) in col_norm.iter_mut().enumerate() {
            *n += a.column(c).norm_squared();
        }
    }
    col_norm.iter_mut().for_each(|n| *n = n.sqrt());

    let mut residuals = ys.clone();
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut coefficients: Vec<Vec<C64>> = vec![Vec::new(); groups.len()];
    let mut residual_norms = Vec::with_capacity(sparsity);
    for _ in 0..sparsity {
        let mut score = vec![0.0f64; cols];
        for (a, r) in mats.iter().zip(&residuals) {
            let corr = a.ad_mul(r);
            for c in 0..cols {
                score[c] += corr[c].norm_sqr();
            }
        }
        let mut pick = None;
        let mut best = -1.0;
        for c in 0..cols {
            if col_norm[c] == 0.0 || support.contains(&c) {
                continue;
            }
            let s = score[c] / (col_norm[c] * col_norm[c]);
            if s > best {
                best = s;
                pick = Some(c);
            }
        }
        let Some(pick) = pick else { break };
        support.push(pick);

        let mut total = 0.0;
        for (g, (a, y)) in mats.iter().zip(&ys).enumerate() {
            let sub = a.select_columns(&support);
            let coef = sub
                .clone()
                .svd(true, true)
                .solve(y, 1e-12)
                .map_err(|e| invalid_input(format!("least-squares refit failed: {e}")))?;
            residuals[g] = y - &sub * &coef;
            total += residuals[g].norm_squared();
            coefficients[g] = coef.iter().copied().collect();
        }
        residual_norms.push(total.sqrt());
    }
    Ok(OmpResult { support, coefficients, residual_norms })
}

/// Turn an OMP result into a detection on the `N`-row beamspace grid.
pub fn omp_detection(result: &OmpResult, ue_size: ArraySize) -> DetectionResult {
    let energies: Vec<(usize, f64)> = (0..result.support.len())
        .map(|k| (result.support[k], result.coefficients.iter().map(|c| c[k].norm_sqr()).sum()))
        .collect();
    let (flat, value) = result.strongest().unwrap_or((0, 0.0));
    let runner_up = energies.iter().filter(|(i, _)| *i != flat).map(|(_, e)| *e).fold(0.0, f64::max);
    let degenerate = value <= 0.0;
    let margin = if degenerate {
        1.0
    } else if runner_up <= 0.0 {
        f64::INFINITY
    } else {
        value / runner_up
    };
    DetectionResult {
        index: crate::array::BeamspaceIndex::from_flat(flat, ue_size),
        flat_index: flat,
        value,
        margin,
        degenerate,
    }
}

/// OMP detection from measurement groups that share one sparse support.
///
/// The sparsity is capped by the number of measurements per group, so a
/// short training period still yields an estimate. Also returns the final
/// residual norm.
pub fn omp_beam_align(groups: &[ComplexMeasurementSet], paths: usize, ue_size: ArraySize) -> Result<(DetectionResult, f64)> {
    let rows = groups.iter().map(|g| g.len()).min().unwrap_or(0);
    if rows == 0 {
        return Err(invalid_input("OMP needs at least one measurement per group"));
    }
    let result = simultaneous_omp(groups, paths.min(rows))?;
    let residual = result.residual_norms.last().copied().unwrap_or(0.0);
    Ok((omp_detection(&result, ue_size), residual))
}

/// Overhead model of interactive bisection beam search for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BisectionModel {
    pub stages: usize,
    pub slots_per_stage: usize,
    pub feedback_cost_slots: usize,
}

impl BisectionModel {
    /// Ideal model: one probing slot per stage and free feedback.
    pub fn ideal(bs: ArraySize, ue: ArraySize) -> Self {
        Self { stages: bisection_stages(bs, ue), slots_per_stage: 1, feedback_cost_slots: 0 }
    }

    /// Stage length from the number of beam pairs one slot can probe:
    /// the four quadrants of a stage need `⌈4 / (m n)⌉` slots.
    pub fn with_chains(bs: ArraySize, ue: ArraySize, bs_chains: usize, ue_chains: usize, feedback_cost_slots: usize) -> Result<Self> {
        let pairs = bs_chains * ue_chains;
        if pairs == 0 {
            return Err(invalid_config("bisection needs at least one RF chain on each side"));
        }
        Ok(Self { stages: bisection_stages(bs, ue), slots_per_stage: 4usize.div_ceil(pairs), feedback_cost_slots })
    }
}

/// `⌈log₂ max(M, N)⌉`
fn bisection_stages(bs: ArraySize, ue: ArraySize) -> usize {
    let d = bs.get().max(ue.get());
    (usize::BITS - (d - 1).leading_zeros()) as usize * usize::from(d > 1)
}

/// Slots needed to train one user.
pub fn bisection_user_time(model: &BisectionModel) -> usize {
    model.stages * (model.slots_per_stage + model.feedback_cost_slots)
}

/// Fraction of `users` trained after `slots` slots when they are served one after another.
pub fn bisection_fraction(model: &BisectionModel, users: usize, slots: usize) -> f64 {
    let per_user = bisection_user_time(model);
    if per_user == 0 {
        return 1.0;
    }
    ((slots / per_user) as f64 / users as f64).min(1.0)
}

/// `K(T)/K` for `T = 1..=t_max` under sequential bisection training.
pub fn bisection_curve(model: &BisectionModel, users: usize, t_max: usize) -> Result<Vec<f64>> {
    if users == 0 {
        return Err(invalid_config("number of users must be at least 1"));
    }
    Ok((1..=t_max).map(|t| bisection_fraction(model, users, t)).collect())
}

/// `K(T)/K` for the broadcast scheme: every user trains at once, so the
/// fraction is the per-user detection probability regardless of `users`.
pub fn broadcast_curve(detection_probability: &[f64], users: usize) -> Result<Vec<f64>> {
    if users == 0 {
        return Err(invalid_config("number of users must be at least 1"));
    }
    Ok(detection_probability.to_vec())
}
