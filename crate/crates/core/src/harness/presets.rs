//! Named reproductions of the reference figures.
//!
//! Desk values use `M = N = 16` with spreading factors halved so that `κ/M`
//! matches the paper setup, and SNRs raised by 6 dB.

use serde::{Deserialize, Serialize};

use super::config::{Estimator, ExperimentConfig, Profile};
use super::curve::CurveResult;
use super::sweep::{sweep, SweepAxis};
use crate::error::{invalid_config, Result};

pub const FIGURES: [u8; 7] = [4, 5, 6, 7, 8, 9, 10];

/// One sweep of a figure; `label` is prefixed to every curve's axis label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRun {
    pub label: Option<String>,
    pub config: ExperimentConfig,
    pub axis: SweepAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePreset {
    pub figure: u8,
    pub runs: Vec<PresetRun>,
}

fn single(figure: u8, config: ExperimentConfig, axis: SweepAxis) -> FigurePreset {
    FigurePreset { figure, runs: vec![PresetRun { label: None, config, axis }] }
}

/// Build the preset of `figure` on top of `base` (profile defaults plus any
/// user overrides such as trials, `T_max` or the seed).
pub fn figure_preset(figure: u8, profile: Profile, base: &ExperimentConfig) -> Result<FigurePreset> {
    let desk = profile == Profile::Desk;
    let cfg = base.clone();
    let preset = match figure {
        4 => single(4, cfg, SweepAxis::CodebookSeed(vec![11, 22, 33, 44])),
        5 => {
            let k: &[usize] = if desk { &[2, 4, 8, 16] } else { &[4, 8, 16, 25] };
            single(5, cfg, SweepAxis::Kappa(k.iter().map(|&k| (k, k)).collect()))
        }
        6 => single(6, cfg, SweepAxis::CombSize(vec![1, 3, 10, 30])),
        7 => {
            let v = if desk {
                vec![(3, 2, 4, 4), (2, 2, 6, 4), (1, 1, 12, 8)]
            } else {
                vec![(3, 2, 8, 8), (2, 2, 12, 8), (1, 1, 24, 16)]
            };
            single(7, cfg, SweepAxis::ChainsKappa(v))
        }
        8 => {
            let snrs: [f64; 2] = if desk { [-27.0, -30.0] } else { [-33.0, -36.0] };
            let runs = snrs
                .iter()
                .map(|&snr| PresetRun {
                    label: Some(format!("snr_bbf_db={snr}")),
                    config: ExperimentConfig { snr_bbf_db: snr, ..cfg.clone() },
                    axis: SweepAxis::UeChains(vec![1, 2, 3, 4]),
                })
                .collect();
            FigurePreset { figure: 8, runs }
        }
        9 => single(9, ExperimentConfig { estimator: Estimator::Nnls, ..cfg }, SweepAxis::Users(vec![10, 50])),
        10 => single(10, ExperimentConfig { estimator: Estimator::Both, ..cfg }, SweepAxis::Alpha(vec![0.0, 0.5, 1.0])),
        _ => return Err(invalid_config(format!("no preset for figure {figure}; expected one of 4..=10"))),
    };
    Ok(preset)
}

pub fn run_preset(preset: &FigurePreset) -> Result<Vec<CurveResult>> {
    let mut out = Vec::new();
    for run in &preset.runs {
        let mut curves = sweep(&run.config, &run.axis)?;
        if let Some(prefix) = &run.label {
            for c in &mut curves {
                c.axis = format!("{prefix};{}", c.axis);
            }
        }
        out.extend(curves);
    }
    Ok(out)
}

pub fn run_figure(figure: u8, profile: Profile, base: &ExperimentConfig) -> Result<Vec<CurveResult>> {
    run_preset(&figure_preset(figure, profile, base)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_validates() {
        for profile in [Profile::Desk, Profile::Paper] {
            let base = ExperimentConfig::for_profile(profile);
            for fig in FIGURES {
                let preset = figure_preset(fig, profile, &base).unwrap();
                for run in &preset.runs {
                    for idx in 0..run.axis.len() {
                        run.axis.apply(&run.config, idx).0.validate().unwrap();
                    }
                }
            }
        }
        assert!(figure_preset(3, Profile::Desk, &ExperimentConfig::desk()).is_err());
    }

    #[test]
    fn constant_product() {
        for profile in [Profile::Desk, Profile::Paper] {
            let preset = figure_preset(7, profile, &ExperimentConfig::for_profile(profile)).unwrap();
            let SweepAxis::ChainsKappa(v) = &preset.runs[0].axis else { panic!() };
            let products: Vec<usize> = v.iter().map(|(a, b, c, d)| a * b * c * d).collect();
            assert!(products.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
