use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::array::{ArraySize, BeamspaceIndex};
use crate::error::{invalid_input, Result};

/// Strongest recovered beamspace bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub index: BeamspaceIndex,
    pub flat_index: usize,
    pub value: f64,
    /// Largest over second-largest entry; infinite when the runner-up is 0.
    pub margin: f64,
    /// Set when every entry is zero and the index carries no information.
    pub degenerate: bool,
}

/// Argmax of `gamma` with ties going to the smallest flat index.
pub fn detect_strongest(gamma: &DVector<f64>, ue_size: ArraySize) -> Result<DetectionResult> {
    if gamma.is_empty() {
        return Err(invalid_input("cannot detect on an empty vector"));
    }
    let mut best = 0;
    for (i, &v) in gamma.iter().enumerate() {
        if v > gamma[best] {
            best = i;
        }
    }
    let value = gamma[best];
    let runner_up = gamma
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let degenerate = value <= 0.0;
    let margin = if degenerate {
        1.0
    } else if runner_up <= 0.0 {
        f64::INFINITY
    } else {
        value / runner_up
    };
    Ok(DetectionResult { index: BeamspaceIndex::from_flat(best, ue_size), flat_index: best, value, margin, degenerate })
}
