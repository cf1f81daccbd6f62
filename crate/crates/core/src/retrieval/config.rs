use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration schedule and tuning for [`run_retrieval`](super::run_retrieval).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub gs_iterations: usize,
    pub gp_iterations: usize,
    pub adapted_iterations: usize,
    /// Initial gradient step, in units where the largest `|g|` is one.
    pub gp_step_size: f64,
    /// Extrapolation weight of the accelerated gradient stage; zero gives plain gradient steps.
    pub gp_momentum: f64,
    /// Halvings tried per gradient step before giving up on that step.
    pub gp_max_halvings: usize,
    /// Fraction of the largest target `|G|` below which samples are relaxed.
    pub adapted_threshold_fraction: f64,
    pub restarts: usize,
    pub seed: u64,
    /// A stage ends early once the residual changes by less than this, relative to the peak target `|G|`.
    pub convergence_tolerance: f64,
    /// Fraction of the peak `√(I₁I₂)` below which samples get zero weight.
    pub intensity_mask_fraction: f64,
    /// Visibility samples within this many standard errors of zero are set to zero.
    pub noise_floor_sigmas: f64,
    /// Restarts closer than this weighted RMS distance (rad) are one cluster.
    pub cluster_tolerance: f64,
    /// Orientation residuals closer than this, relative to the peak target `|G|`, are ambiguous.
    pub ambiguity_tolerance: f64,
    /// Allowance above one for measured visibility before the dip is rejected.
    pub consistency_tolerance: f64,
    pub fit_amplitude: bool,
    /// Translate the dip so its minimum sits at zero delay.
    pub align_minimum: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            gs_iterations: 200,
            gp_iterations: 400,
            adapted_iterations: 50,
            gp_step_size: 0.5,
            gp_momentum: 0.95,
            gp_max_halvings: 20,
            adapted_threshold_fraction: 0.2,
            restarts: 8,
            seed: 0,
            convergence_tolerance: 1e-12,
            intensity_mask_fraction: 0.1,
            noise_floor_sigmas: 3.0,
            cluster_tolerance: 0.05,
            ambiguity_tolerance: 1e-9,
            consistency_tolerance: 1e-6,
            fit_amplitude: true,
            align_minimum: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gs_iterations + self.gp_iterations + self.adapted_iterations == 0 {
            return Err(Error::InvalidInput("iteration schedule is empty".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput(
                "at least one restart is required".into(),
            ));
        }
        let unit_open = |x: f64| x > 0.0 && x < 1.0;
        if !(self.gp_step_size.is_finite() && self.gp_step_size > 0.0) {
            return Err(Error::InvalidInput("gp_step_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.gp_momentum) {
            return Err(Error::InvalidInput("gp_momentum must lie in [0, 1)".into()));
        }
        if !unit_open(self.adapted_threshold_fraction) {
            return Err(Error::InvalidInput(
                "adapted_threshold_fraction must lie in (0, 1)".into(),
            ));
        }
        if !unit_open(self.intensity_mask_fraction) {
            return Err(Error::InvalidInput(
                "intensity_mask_fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "convergence_tolerance must be positive".into(),
            ));
        }
        for (name, v) in [
            ("noise_floor_sigmas", self.noise_floor_sigmas),
            ("cluster_tolerance", self.cluster_tolerance),
            ("ambiguity_tolerance", self.ambiguity_tolerance),
            ("consistency_tolerance", self.consistency_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}
