use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::ArraySize;
use crate::baselines::BisectionModel;
use crate::channel::GaussMarkovParams;
use crate::error::{invalid_config, Result};
use crate::measure::{db_to_linear, Numerology};

/// Which estimators a run evaluates on the same simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Nnls,
    Omp,
    Both,
}

impl Estimator {
    pub fn runs_nnls(self) -> bool {
        matches!(self, Estimator::Nnls | Estimator::Both)
    }

    pub fn runs_omp(self) -> bool {
        matches!(self, Estimator::Omp | Estimator::Both)
    }
}

/// How OMP combines observations taken on different streams and subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmpMode {
    /// Every observation goes into one linear system with one unknown channel.
    Stacked,
    /// One system per (stream, subcarrier) with a shared support.
    Joint,
}

/// How many comb subcarriers per stream the OMP baseline may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmpSubcarriers {
    All,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(invalid_config(format!("unknown profile `{s}` (expected desk or paper)"))),
        }
    }
}

/// Everything that determines one experiment. Serialized flat, one key per field.
///
/// Units: frequencies in Hz, delays in seconds, SNR in dB, everything else counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// `M`
    pub bs_antennas: usize,
    /// `N`
    pub ue_antennas: usize,
    /// `m`
    pub bs_chains: usize,
    /// `n`
    pub ue_chains: usize,
    pub kappa_u: usize,
    pub kappa_v: usize,

    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub symbols_per_slot: usize,
    /// `F'`
    pub comb_size: usize,
    pub cp_fraction: f64,
    /// Beacon slot repetition interval, used to report time in ms.
    pub frame_ms: f64,

    pub snr_bbf_db: f64,
    pub noise_var: f64,

    /// Mean powers `γ_l`, one per path.
    pub path_gains: Vec<f64>,
    pub alpha: f64,
    pub on_grid: bool,
    pub max_delay_s: f64,

    pub t_max: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub codebook_seed: u64,
    /// Draw channels independently of the codebook seed when false.
    pub shared_channels: bool,

    pub estimator: Estimator,
    pub omp_subcarriers: OmpSubcarriers,
    pub omp_mode: OmpMode,

    /// Users `K` and feedback cost for the multi-user overhead comparison.
    pub users: usize,
    pub feedback_cost_slots: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Reduced scale that keeps a full figure sweep in the minutes range.
    pub fn desk() -> Self {
        let num = Numerology::paper();
        Self {
            bs_antennas: 16,
            ue_antennas: 16,
            bs_chains: 3,
            ue_chains: 2,
            kappa_u: 4,
            kappa_v: 4,
            carrier_hz: num.carrier_hz,
            bandwidth_hz: num.bandwidth_hz,
            subcarrier_spacing_hz: num.subcarrier_spacing_hz,
            symbols_per_slot: num.symbols_per_slot,
            comb_size: num.comb_size,
            cp_fraction: num.cp_fraction,
            frame_ms: 1.0,
            snr_bbf_db: -27.0,
            noise_var: 1.0,
            path_gains: vec![1.0],
            alpha: 0.0,
            on_grid: false,
            max_delay_s: 0.0,
            t_max: 60,
            trials: 100,
            master_seed: 1,
            codebook_seed: 7,
            shared_channels: true,
            estimator: Estimator::Nnls,
            omp_subcarriers: OmpSubcarriers::All,
            omp_mode: OmpMode::Joint,
            users: 1,
            feedback_cost_slots: 0,
        }
    }

    /// The setup of the reference experiments: 32×32 arrays at −33 dB.
    pub fn paper() -> Self {
        Self {
            bs_antennas: 32,
            ue_antennas: 32,
            kappa_u: 8,
            kappa_v: 8,
            snr_bbf_db: -33.0,
            trials: 200,
            ..Self::desk()
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Parse a flat TOML document; keys not given keep the `base` values.
    pub fn from_toml_str(text: &str, base: &ExperimentConfig) -> Result<Self> {
        let overrides: toml::Table = toml::from_str(text)?;
        let mut merged = toml::Table::try_from(base).map_err(|e| invalid_config(e.to_string()))?;
        for (k, v) in overrides {
            merged.insert(k, v);
        }
        let cfg: ExperimentConfig = merged.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, base: &ExperimentConfig) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, base)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid_config(e.to_string()))
    }

    pub fn bs_size(&self) -> ArraySize {
        ArraySize::new(self.bs_antennas).expect("validated")
    }

    pub fn ue_size(&self) -> ArraySize {
        ArraySize::new(self.ue_antennas).expect("validated")
    }

    pub fn numerology(&self) -> Numerology {
        Numerology {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            symbols_per_slot: self.symbols_per_slot,
            comb_size: self.comb_size,
            cp_fraction: self.cp_fraction,
        }
    }

    pub fn snr_bbf_linear(&self) -> f64 {
        db_to_linear(self.snr_bbf_db)
    }

    pub fn gauss_markov(&self) -> Result<GaussMarkovParams> {
        GaussMarkovParams::new(self.alpha)
    }

    pub fn bisection_model(&self) -> BisectionModel {
        BisectionModel { feedback_cost_slots: self.feedback_cost_slots, ..BisectionModel::ideal(self.bs_size(), self.ue_size()) }
    }

    pub fn validate(&self) -> Result<()> {
        ArraySize::new(self.bs_antennas)?;
        ArraySize::new(self.ue_antennas)?;
        if self.bs_chains == 0 || self.ue_chains == 0 {
            return Err(invalid_config("bs_chains and ue_chains must be at least 1"));
        }
        if self.bs_chains > self.bs_antennas || self.ue_chains > self.ue_antennas {
            return Err(invalid_config("more RF chains than antennas"));
        }
        if self.kappa_u == 0 || self.kappa_u > self.bs_antennas {
            return Err(invalid_config(format!("kappa_u must lie in 1..={}", self.bs_antennas)));
        }
        if self.kappa_v == 0 || self.kappa_v > self.ue_antennas {
            return Err(invalid_config(format!("kappa_v must lie in 1..={}", self.ue_antennas)));
        }
        self.numerology().validate(self.bs_chains)?;
        if !(self.noise_var > 0.0) {
            return Err(invalid_config("noise_var must be positive"));
        }
        if !self.snr_bbf_db.is_finite() {
            return Err(invalid_config("snr_bbf_db must be finite"));
        }
        if self.path_gains.is_empty() || self.path_gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(invalid_config("path_gains must be a non-empty list of positive numbers"));
        }
        let max = self.path_gains.iter().cloned().fold(f64::MIN, f64::max);
        if self.path_gains.iter().filter(|&&g| g == max).count() > 1 {
            return Err(invalid_config("the strongest path gain must be unique"));
        }
        if self.path_gains.len() > self.bs_antennas * self.ue_antennas {
            return Err(invalid_config("more paths than beamspace bins"));
        }
        self.gauss_markov()?;
        let cp = self.numerology().cp_duration();
        if !(self.max_delay_s >= 0.0) || self.max_delay_s > cp {
            return Err(invalid_config(format!("max_delay_s must lie in [0, {cp:e}] (the cyclic prefix)")));
        }
        if self.t_max == 0 || self.trials == 0 {
            return Err(invalid_config("t_max and trials must be at least 1"));
        }
        if self.users == 0 {
            return Err(invalid_config("users must be at least 1"));
        }
        if !(self.frame_ms > 0.0) {
            return Err(invalid_config("frame_ms must be positive"));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::paper().validate().unwrap();
    }

    #[test]
    fn toml_overrides_and_unknown_keys() {
        let base = ExperimentConfig::desk();
        let cfg = ExperimentConfig::from_toml_str("kappa_u = 8\nalpha = 0.5\nestimator = \"both\"\n", &base).unwrap();
        assert_eq!(cfg.kappa_u, 8);
        assert_eq!(cfg.kappa_v, 4);
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.estimator, Estimator::Both);
        assert!(ExperimentConfig::from_toml_str("kappa = 3\n", &base).is_err());
        assert!(ExperimentConfig::from_toml_str("kappa_u = 17\n", &base).is_err());
        assert!(ExperimentConfig::from_toml_str("kappa_u = \"x\"\n", &base).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::paper();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text, &ExperimentConfig::desk()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ExperimentConfig { trials: 0, ..ExperimentConfig::desk() },
            ExperimentConfig { t_max: 0, ..ExperimentConfig::desk() },
            ExperimentConfig { alpha: 1.5, ..ExperimentConfig::desk() },
            ExperimentConfig { path_gains: vec![0.5, 0.5], ..ExperimentConfig::desk() },
            ExperimentConfig { path_gains: vec![], ..ExperimentConfig::desk() },
            ExperimentConfig { comb_size: 1000, ..ExperimentConfig::desk() },
            ExperimentConfig { max_delay_s: 1.0, ..ExperimentConfig::desk() },
            ExperimentConfig { noise_var: 0.0, ..ExperimentConfig::desk() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::desk();
        let b = ExperimentConfig { master_seed: 2, ..a.clone() };
        assert_eq!(a.config_hash(), ExperimentConfig::desk().config_hash());
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
