//! Experiment orchestration: configuration, trials, detection curves, sweeps,
//! figure presets and result files.

pub mod config;
pub mod curve;
pub mod emit;
pub mod presets;
pub mod seeds;
pub mod sweep;
pub mod trial;

pub use config::{Estimator, ExperimentConfig, OmpMode, OmpSubcarriers, Profile};
pub use curve::{aggregate, binomial_stderr, detection_curve, detection_curves, run_trials, CurveResult};
pub use emit::{emit_results, read_json, write_csv, write_json, OutputFormat, CSV_HEADER};
pub use presets::{figure_preset, run_figure, run_preset, FigurePreset, PresetRun, FIGURES};
pub use sweep::{bisection_result, sweep, SweepAxis, AXIS_NAMES};
pub use trial::{run_trial, ExperimentContext, TrialOutcome, TrialResult};
