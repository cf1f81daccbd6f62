//! Phase retrieval of the spectral phase difference from `|g|` and a dip.

mod config;
mod engine;
mod ops;

pub use config::RetrievalConfig;
pub use engine::{prepare_target, run_retrieval, PreparedTarget, RestartSummary, RetrievalResult};
pub use ops::{
    adapted_gs_step, adapted_magnitude, affine_fit, detrend, flip_candidate, gp_step, gs_step,
    mask_weights, phase_distance, phase_gradient, residual, unwrap_from, weighted_rms,
};
