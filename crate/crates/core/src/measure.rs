//! Beacon observations, averaged power measurements and link budgets.
//!
//! Everything is simulated directly in the frequency domain: one complex
//! observation per (OFDM symbol, probing stream, UE chain, comb subcarrier).
//! Probing symbols are the constant `√P_dim`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::ArraySize;
use crate::channel::{complex_gaussian, FadingState, MpcSet};
use crate::codebook::SupportSet;
use crate::error::{invalid_config, invalid_input, Result};
use crate::C64;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// OFDM numerology and comb layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    /// OFDM symbols per beacon slot (`S`).
    pub symbols_per_slot: usize,
    /// Subcarriers per probing stream (`F'`).
    pub comb_size: usize,
    /// Cyclic prefix length as a fraction of the useful symbol time.
    pub cp_fraction: f64,
}

impl Numerology {
    /// 70 GHz carrier, 1 GHz bandwidth, 480 kHz spacing, 14-symbol slots, `F' = 3`.
    pub fn paper() -> Self {
        Self {
            carrier_hz: 70e9,
            bandwidth_hz: 1e9,
            subcarrier_spacing_hz: 480e3,
            symbols_per_slot: 14,
            comb_size: 3,
            cp_fraction: 0.25,
        }
    }

    /// Check the numerology for `streams` probing streams.
    pub fn validate(&self, streams: usize) -> Result<()> {
        if !(self.subcarrier_spacing_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(invalid_config("bandwidth and subcarrier spacing must be positive"));
        }
        if self.symbols_per_slot == 0 || self.comb_size == 0 {
            return Err(invalid_config("symbols per slot and comb size must be at least 1"));
        }
        if !(self.cp_fraction >= 0.0) {
            return Err(invalid_config("cyclic prefix fraction must be non-negative"));
        }
        if self.comb_size * streams > self.num_subcarriers() {
            return Err(invalid_config(format!(
                "{} streams with {} subcarriers each exceed the {} available subcarriers",
                streams,
                self.comb_size,
                self.num_subcarriers()
            )));
        }
        Ok(())
    }

    /// `F = ⌊B / Δf⌋`.
    pub fn num_subcarriers(&self) -> usize {
        (self.bandwidth_hz / self.subcarrier_spacing_hz).floor() as usize
    }

    /// `t₀ = 1/Δf + τ_cp`.
    pub fn symbol_duration(&self) -> f64 {
        (1.0 + self.cp_fraction) / self.subcarrier_spacing_hz
    }

    pub fn cp_duration(&self) -> f64 {
        self.cp_fraction / self.subcarrier_spacing_hz
    }

    /// Subcarrier index of element `sub` of stream `stream`'s comb.
    ///
    /// Combs are evenly interleaved: stream `i` uses `i, i + D, i + 2D, …`
    /// with `D = ⌊F / F'⌋`.
    pub fn comb_subcarrier(&self, stream: usize, sub: usize) -> usize {
        let stride = (self.num_subcarriers() / self.comb_size).max(1);
        sub * stride + stream
    }
}

/// `SNR_BBF = P_tot Σγ / (N₀ B)`.
pub fn snr_bbf(p_tot: f64, total_path_power: f64, n0: f64, bandwidth_hz: f64) -> f64 {
    p_tot * total_path_power / (n0 * bandwidth_hz)
}

/// Best-case per-subcarrier estimation SNR after beamforming,
/// `(MN / (κ_u κ_v m n)) · (B / (F' Δf)) · SNR_BBF`.
#[allow(clippy::too_many_arguments)]
pub fn snr_ce_abf(
    snr_bbf: f64,
    numerology: &Numerology,
    bs: ArraySize,
    ue: ArraySize,
    kappa_u: usize,
    kappa_v: usize,
    bs_chains: usize,
    ue_chains: usize,
) -> f64 {
    let spatial = (bs.get() * ue.get()) as f64 / (kappa_u * kappa_v * bs_chains * ue_chains) as f64;
    let spectral = numerology.bandwidth_hz / (numerology.comb_size as f64 * numerology.subcarrier_spacing_hz);
    spatial * spectral * snr_bbf
}

/// Per-path gains entering [`snr_abf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGain {
    pub avg_power: f64,
    /// `|g^UE|²`
    pub ue_gain: f64,
    /// `|g^BS|²`
    pub bs_gain: f64,
}

/// `SNR_ABF = P_tot Σ_l γ_l |g^UE_l|² |g^BS_l|² / (m n N₀ B_i)`.
pub fn snr_abf(p_tot: f64, paths: &[PathGain], bs_chains: usize, ue_chains: usize, n0: f64, stream_bandwidth_hz: f64) -> f64 {
    let s: f64 = paths.iter().map(|p| p.avg_power * p.ue_gain * p.bs_gain).sum();
    p_tot * s / ((bs_chains * ue_chains) as f64 * n0 * stream_bandwidth_hz)
}

/// Transmit power and noise level of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Linear SNR before beamforming.
    pub snr_bbf: f64,
    /// Per-subcarrier noise variance `σ² = Δf N₀`.
    pub noise_var: f64,
    /// Noise PSD `N₀`.
    pub n0: f64,
    /// Total transmit power.
    pub p_tot: f64,
    /// Power per transmit signal dimension `P_tot / (m F')`.
    pub p_dim: f64,
}

impl PowerConfig {
    /// Pick `P_tot` so that the configured SNR before beamforming is met.
    pub fn from_snr(
        snr_bbf_linear: f64,
        noise_var: f64,
        numerology: &Numerology,
        bs_chains: usize,
        total_path_power: f64,
    ) -> Result<Self> {
        if !(noise_var > 0.0) || !(snr_bbf_linear >= 0.0) || !(total_path_power > 0.0) || bs_chains == 0 {
            return Err(invalid_config("noise variance, SNR and path power must be positive"));
        }
        let n0 = noise_var / numerology.subcarrier_spacing_hz;
        let p_tot = snr_bbf_linear * n0 * numerology.bandwidth_hz / total_path_power;
        let p_dim = p_tot / (bs_chains * numerology.comb_size) as f64;
        Ok(Self { snr_bbf: snr_bbf_linear, noise_var, n0, p_tot, p_dim })
    }
}

/// Averaged powers `q̌`, ordered (slot, BS chain, UE chain) like the rows of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMeasurements {
    values: Vec<f64>,
    bs_chains: usize,
    ue_chains: usize,
    slots: usize,
}

impl PowerMeasurements {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn index(&self, slot: usize, bs_chain: usize, ue_chain: usize) -> usize {
        (slot * self.bs_chains + bs_chain) * self.ue_chains + ue_chain
    }

    pub fn get(&self, slot: usize, bs_chain: usize, ue_chain: usize) -> f64 {
        self.values[self.index(slot, bs_chain, ue_chain)]
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// `√(P_dim/n) · v̌^H Ȟ ǔ + z` with `z ~ CN(0, σ²)`.
pub fn synth_beacon_observation<R: Rng + ?Sized>(
    channel: &DMatrix<C64>,
    bs_coeff: &DVector<f64>,
    ue_coeff: &DVector<f64>,
    p_dim: f64,
    ue_chains: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<C64> {
    if channel.ncols() != bs_coeff.len() || channel.nrows() != ue_coeff.len() {
        return Err(invalid_input("beam weights do not match the channel dimensions"));
    }
    let u = bs_coeff.map(|x| C64::new(x, 0.0));
    let v = ue_coeff.map(|x| C64::new(x, 0.0));
    let signal = (v.adjoint() * channel * u)[0];
    let noise = if noise_var > 0.0 { complex_gaussian(rng, noise_var) } else { C64::new(0.0, 0.0) };
    Ok(signal * (p_dim / ue_chains as f64).sqrt() + noise)
}

/// Mean received power `(1/(S F')) Σ |y|²` over one slot.
pub fn slot_power_measurement(observations: &[C64]) -> Result<f64> {
    if observations.is_empty() {
        return Err(invalid_input("a power measurement needs at least one observation"));
    }
    Ok(observations.iter().map(|y| y.norm_sqr()).sum::<f64>() / observations.len() as f64)
}

/// Collect per-(slot, BS chain, UE chain) powers into `q̌`.
pub fn assemble_measurements(
    powers: Vec<f64>,
    bs_chains: usize,
    ue_chains: usize,
    slots: usize,
) -> Result<PowerMeasurements> {
    if powers.len() != bs_chains * ue_chains * slots {
        return Err(invalid_input(format!(
            "expected {} powers, got {}",
            bs_chains * ue_chains * slots,
            powers.len()
        )));
    }
    if powers.iter().any(|p| !(*p >= 0.0)) {
        return Err(invalid_input("power measurements must be non-negative"));
    }
    Ok(PowerMeasurements { values: powers, bs_chains, ue_chains, slots })
}

/// The coefficient `P_dim / (n κ_u κ_v)` relating `vec(Γ̌)` to `γ`.
///
/// `Γ̌` holds `E|Ȟ_rc|²` with unnormalized steering vectors (an on-grid path
/// of power 1 puts `M N` in its bin), so no extra `M N` factor is needed for
/// `B γ + σ²` to equal the mean power of on-grid channels.
pub fn gamma_scale(power: &PowerConfig, ue_chains: usize, kappa_u: usize, kappa_v: usize) -> f64 {
    power.p_dim / (ue_chains * kappa_u * kappa_v) as f64
}

/// Target vector `γ = P_dim / (n κ_u κ_v) · vec(Γ̌)` (column-major).
pub fn gamma_target(
    second_moments: &DMatrix<f64>,
    power: &PowerConfig,
    ue_chains: usize,
    kappa_u: usize,
    kappa_v: usize,
) -> DVector<f64> {
    let scale = gamma_scale(power, ue_chains, kappa_u, kappa_v);
    DVector::from_column_slice(second_moments.as_slice()) * scale
}

/// Effective beam gains of every path for one beam pair.
///
/// `bs_gain = ǎ(θ_l)^H ǔ` and `ue_gain = v̌^H b̌(φ_l)`; their product times the
/// path gain is the noiseless `v̌^H Ȟ ǔ` contribution of path `l`.
pub fn beam_gains(
    path_coeffs: &[(DVector<C64>, DVector<C64>)],
    bs_support: &SupportSet,
    ue_support: &SupportSet,
) -> Vec<(C64, C64)> {
    let su = 1.0 / (bs_support.len() as f64).sqrt();
    let sv = 1.0 / (ue_support.len() as f64).sqrt();
    path_coeffs
        .iter()
        .map(|(a, b)| {
            let g_bs: C64 = bs_support.indices().iter().map(|&c| a[c].conj()).sum::<C64>() * su;
            let g_ue: C64 = ue_support.indices().iter().map(|&r| b[r]).sum::<C64>() * sv;
            (g_bs, g_ue)
        })
        .collect()
}

/// Exact mean `E[q̌] = (P_dim/n) Σ_l γ_l |g^BS_l|² |g^UE_l|² + σ²` for one beam pair.
pub fn expected_power(mpcs: &MpcSet, gains: &[(C64, C64)], power: &PowerConfig, ue_chains: usize) -> f64 {
    let signal: f64 = mpcs
        .paths()
        .iter()
        .zip(gains)
        .map(|(p, (gb, gu))| p.avg_power * gb.norm_sqr() * gu.norm_sqr())
        .sum();
    power.p_dim / ue_chains as f64 * signal + power.noise_var
}

/// Observations of one beacon slot for every (BS chain, UE chain) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotObservations {
    /// `q̌_{s,i,j}` ordered `i` outer, `j` inner.
    pub powers: Vec<f64>,
    /// Per-subcarrier observations averaged over the slot's symbols,
    /// ordered `(i, j, k)` with `k` the comb position.
    pub coherent: Vec<C64>,
}

/// Inputs that stay fixed while a trial runs slot after slot.
pub struct SlotContext<'a> {
    pub mpcs: &'a MpcSet,
    pub path_coeffs: &'a [(DVector<C64>, DVector<C64>)],
    pub numerology: &'a Numerology,
    pub power: &'a PowerConfig,
    pub ue_chains: usize,
}

/// Synthesize all `S · F'` observations of every beam pair in one slot and
/// reduce them to powers (and to symbol-averaged complex samples).
///
/// The channel is constant over the slot; noise is fresh per symbol.
pub fn synthesize_slot<R: Rng + ?Sized>(
    ctx: &SlotContext<'_>,
    fading: &FadingState,
    bs_supports: &[&SupportSet],
    ue_supports: &[&SupportSet],
    rng: &mut R,
) -> SlotObservations {
    let num = ctx.numerology;
    let s_count = num.symbols_per_slot;
    let f_count = num.comb_size;
    let amp = (ctx.power.p_dim / ctx.ue_chains as f64).sqrt();
    let t0 = num.symbol_duration();
    let mut powers = Vec::with_capacity(bs_supports.len() * ue_supports.len());
    let mut coherent = Vec::with_capacity(bs_supports.len() * ue_supports.len() * f_count);
    for (i, u) in bs_supports.iter().enumerate() {
        // Delay phase of every (path, comb position) for stream i.
        let phases: Vec<C64> = (0..f_count)
            .flat_map(|k| {
                let omega = num.comb_subcarrier(i, k) as f64;
                ctx.mpcs
                    .paths()
                    .iter()
                    .map(move |p| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * omega / t0 * p.delay))
            })
            .collect();
        for v in ue_supports {
            let gains = beam_gains(ctx.path_coeffs, u, v);
            let mut acc = 0.0;
            for k in 0..f_count {
                let mut clean = C64::new(0.0, 0.0);
                for (l, (gb, gu)) in gains.iter().enumerate() {
                    clean += fading.gain(l, i, k) * phases[k * ctx.mpcs.len() + l] * gb * gu;
                }
                clean *= amp;
                let mut sum = C64::new(0.0, 0.0);
                for _ in 0..s_count {
                    let y = clean + complex_gaussian(rng, ctx.power.noise_var);
                    acc += y.norm_sqr();
                    sum += y;
                }
                coherent.push(sum / s_count as f64);
            }
            powers.push(acc / (s_count * f_count) as f64);
        }
    }
    SlotObservations { powers, coherent }
}
