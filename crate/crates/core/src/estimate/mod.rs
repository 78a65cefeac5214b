//! Recovery of the beamspace power profile and detection of its peak.

mod detect;
mod nnls;

pub use detect::{detect_strongest, DetectionResult};
pub use nnls::{
    kkt_residual, nnls_dense, nnls_normal, nnls_solve, support_above, Method, NnlsOptions, NnlsSolution,
    NnlsStatus, NormalEquations, ACTIVE_SET_MAX_COLS, DEFAULT_REL_TOL,
};
