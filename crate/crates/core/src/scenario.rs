//! Synthetic experiments: two spectra, a known phase difference and a delay schedule.

use crate::detector::CountingBudget;
use crate::error::{Error, Result};
use crate::forward::{synthesize_dip, DipPattern, StateCombination};
use crate::grid::FrequencyGrid;
use crate::presets::PhasePreset;
use crate::scalar::Real;
use crate::spectrum::{equivalent_magnitude, IntensitySpectrum, PhaseSpectrum};

/// Converts an ordinary frequency in Hz to angular frequency.
pub fn angular<T: Real>(hz: f64) -> T {
    T::lit(std::f64::consts::TAU * hz)
}

/// A ground-truth experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub grid: FrequencyGrid<T>,
    pub i1: IntensitySpectrum<T>,
    pub i2: IntensitySpectrum<T>,
    pub truth: PhaseSpectrum<T>,
    pub combo: StateCombination<T>,
    /// Delays at which the dip is sampled, seconds.
    pub delays: Vec<T>,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        i1: IntensitySpectrum<T>,
        i2: IntensitySpectrum<T>,
        truth: PhaseSpectrum<T>,
        combo: StateCombination<T>,
        delays: Vec<T>,
    ) -> Result<Self> {
        if i1.grid() != i2.grid() || i1.grid() != truth.grid() {
            return Err(Error::GridMismatch(
                "scenario spectra and phase must share one grid".into(),
            ));
        }
        combo.validate()?;
        Ok(Self {
            grid: *i1.grid(),
            i1,
            i2,
            truth,
            combo,
            delays,
        })
    }

    /// `√(I₁I₂)` of the unit-area spectra.
    pub fn g_mag(&self) -> Vec<T> {
        equivalent_magnitude(&self.i1, &self.i2).expect("scenario spectra share a grid")
    }

    pub fn true_dip(&self) -> Result<DipPattern<T>> {
        synthesize_dip(&self.i1, &self.i2, &self.truth, self.combo, &self.delays)
    }
}

/// Gaussian intensity with the given full width at half maximum (angular units).
pub fn gaussian_intensity<T: Real>(
    grid: FrequencyGrid<T>,
    center: T,
    fwhm: T,
) -> Result<IntensitySpectrum<T>> {
    let sigma = fwhm / (T::lit(8.0) * T::lit(2.0).ln()).sqrt();
    IntensitySpectrum::from_fn(grid, |w| {
        let x = (w - center) / sigma;
        (-(x * x) / T::lit(2.0)).exp()
    })
}

/// `count` delays spaced `step` apart and centred on zero, plus `extra` delays, sorted.
pub fn delay_schedule<T: Real>(count: usize, step: T, extra: &[T]) -> Vec<T> {
    let half = T::from_usize_lossy(count / 2);
    let mut delays: Vec<T> = (0..count)
        .map(|k| (T::from_usize_lossy(k) - half) * step)
        .chain(extra.iter().copied())
        .collect();
    delays.sort_by(|a, b| a.partial_cmp(b).expect("finite delays"));
    delays.dedup();
    delays
}

/// Parameters of the reference simulation at the 1550 nm band.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSetup {
    pub count: usize,
    /// Delay step, seconds; the frequency step follows from it.
    pub delay_step: f64,
    pub center_hz: f64,
    pub fwhm_hz: f64,
    pub amplitude: f64,
    pub half_width_hz: f64,
    pub skew: f64,
    pub smoothing_hz: f64,
    /// Dip samples on the uniform core.
    pub core_points: usize,
    /// Far reference delays in units of `delay_step`, mirrored about zero.
    pub baseline_steps: Vec<u32>,
}

impl Default for ReferenceSetup {
    fn default() -> Self {
        Self {
            count: 2048,
            delay_step: 1.25e-12,
            center_hz: 193.19e12,
            fwhm_hz: 150e9,
            amplitude: 1.0,
            half_width_hz: 150e9,
            skew: 0.1,
            smoothing_hz: 10e9,
            core_points: 35,
            baseline_steps: vec![36, 44, 52],
        }
    }
}

impl ReferenceSetup {
    pub fn grid<T: Real>(&self) -> Result<FrequencyGrid<T>> {
        let spacing_hz = 1.0 / (self.count as f64 * self.delay_step);
        FrequencyGrid::new(angular(self.center_hz), angular(spacing_hz), self.count)
    }

    pub fn preset<T: Real>(&self) -> PhasePreset<T> {
        PhasePreset::InvertedN {
            center: angular(self.center_hz),
            amplitude: T::lit(self.amplitude),
            half_width: angular(self.half_width_hz),
            skew: T::lit(self.skew),
            smoothing: angular(self.smoothing_hz),
        }
    }

    pub fn delays<T: Real>(&self) -> Vec<T> {
        let step = T::lit(self.delay_step);
        let extra: Vec<T> = self
            .baseline_steps
            .iter()
            .flat_map(|k| {
                let d = T::from_usize_lossy(*k as usize) * step;
                [-d, d]
            })
            .collect();
        delay_schedule(self.core_points, step, &extra)
    }

    /// Default counting budget, with a baseline rule that keeps only the far delays.
    ///
    /// At three half-widths the reference set would reach into the dip wings,
    /// where residual interference biases the baseline low.
    pub fn budget(&self) -> CountingBudget {
        CountingBudget {
            baseline_multiple: 8.0,
            ..CountingBudget::default()
        }
    }

    /// Identical Gaussian spectra, inverted-N phase, weak coherent states of equal amplitude.
    pub fn build<T: Real>(&self) -> Result<Scenario<T>> {
        let grid = self.grid::<T>()?;
        let center = angular(self.center_hz);
        let i1 = gaussian_intensity(grid, center, angular(self.fwhm_hz))?;
        let i2 = i1.clone();
        let truth = self.preset().render(&grid)?;
        Scenario::new(
            i1,
            i2,
            truth,
            StateCombination::coherent_coherent(T::one(), T::one())?,
            self.delays(),
        )
    }
}

/// The reference simulation with default parameters.
pub fn reference_scenario<T: Real>() -> Result<Scenario<T>> {
    ReferenceSetup::default().build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_matches_delay_step() {
        let s = ReferenceSetup::default();
        let g = s.grid::<f64>().unwrap();
        assert!((g.conjugate().spacing() - 1.25e-12).abs() < 1e-24);
        let d = s.delays::<f64>();
        assert_eq!(d.len(), 41);
        for t in &d {
            let k = t / 1.25e-12;
            assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_has_requested_width() {
        let g = FrequencyGrid::new(0.0f64, 0.01, 1024).unwrap();
        let s = gaussian_intensity(g, 0.0, 2.0).unwrap();
        let half = s.values()[g.position(1.0).round() as usize] / s.peak();
        assert!((half - 0.5).abs() < 1e-12);
    }
}
