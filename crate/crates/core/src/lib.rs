//! Beam alignment for mm-Wave hybrid MIMO from second-order channel statistics.
//!
//! The base station broadcasts pseudo-random probing beams, each user senses
//! them with its own pseudo-random receive beams, and the averaged received
//! powers form a linear system `q = B γ + σ² 1 + w` in the non-negative
//! beamspace power profile `γ`. Non-negative least squares recovers `γ`
//! and its largest entry gives the AoA-AoD pair to align to.
//!
//! Module map:
//!
//! - [`array`]: ULA responses, angle grids, DFT beamspace transforms.
//! - [`channel`]: multipath channel draws with Gauss-Markov fading.
//! - [`codebook`]: probing/sensing supports and the binary sensing matrix.
//! - [`measure`]: beacon observations, power measurements, SNR formulas.
//! - [`estimate`]: NNLS solver, KKT diagnostics, detection.
//! - [`baselines`]: OMP on complex observations and a bisection overhead model.
//! - [`harness`]: trials, detection curves, sweeps, presets, output files.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod baselines;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod measure;

pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

pub use array::{Angle, AngleGrid, ArraySize, BeamspaceIndex};
pub use channel::{FadingState, GaussMarkovParams, Mpc, MpcSet};
pub use codebook::{Codebook, SensingMatrix, Side, SupportSet};
pub use error::{Error, Result};
pub use estimate::{DetectionResult, NnlsOptions, NnlsSolution, NnlsStatus};
pub use harness::{CurveResult, ExperimentConfig, TrialOutcome};
pub use measure::{Numerology, PowerConfig, PowerMeasurements};
