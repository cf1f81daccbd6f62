//! Real-valued spectra sampled on a [`FrequencyGrid`].

use crate::error::{Error, Result};
use crate::grid::{check_finite, FrequencyGrid};
use crate::interp::Linear;
use crate::scalar::Real;

/// Non-negative intensity per frequency sample, arbitrary units.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySpectrum<T> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
}

impl<T: Real> IntensitySpectrum<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::GridMismatch(format!(
                "{} intensity samples for a grid of {}",
                values.len(),
                grid.count()
            )));
        }
        check_finite(&values)?;
        if let Some(i) = values.iter().position(|v| *v < T::zero()) {
            return Err(Error::OutOfRange(format!(
                "negative intensity {} at sample {i}",
                values[i]
            )));
        }
        if !values.iter().any(|v| *v > T::zero()) {
            return Err(Error::Degenerate(
                "intensity spectrum is identically zero".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Builds a spectrum by evaluating `f(ω)` at every grid frequency.
    pub fn from_fn(grid: FrequencyGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.frequencies().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Linear resampling of tabulated `(ω, I)` pairs, zero outside the table.
    pub fn resample(grid: FrequencyGrid<T>, omegas: &[T], intensities: &[T]) -> Result<Self> {
        let table = Linear::new(omegas.to_vec(), intensities.to_vec())?;
        Self::new(
            grid,
            grid.frequencies()
                .into_iter()
                .map(|w| table.eval_or(w, T::zero()))
                .collect(),
        )
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `Δω · Σ I`.
    pub fn area(&self) -> T {
        self.grid.spacing() * self.values.iter().copied().sum::<T>()
    }

    /// Rescaled copy with unit area.
    pub fn normalized(&self) -> Self {
        let area = self.area();
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| *v / area).collect(),
        }
    }

    pub fn peak(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// Intensity-weighted mean angular frequency.
    pub fn centroid(&self) -> T {
        weighted_centroid(&self.grid, &self.values)
    }
}

/// Phase in radians per frequency sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum<T> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
}

impl<T: Real> PhaseSpectrum<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::GridMismatch(format!(
                "{} phase samples for a grid of {}",
                values.len(),
                grid.count()
            )));
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: FrequencyGrid<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.count()],
        }
    }

    pub fn from_fn(grid: FrequencyGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.frequencies().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Linear resampling of tabulated `(ω, φ)` pairs, holding end values outside the table.
    pub fn resample(grid: FrequencyGrid<T>, omegas: &[T], phases: &[T]) -> Result<Self> {
        let table = Linear::new(omegas.to_vec(), phases.to_vec())?;
        Self::new(
            grid,
            grid.frequencies()
                .into_iter()
                .map(|w| table.eval_clamped(w))
                .collect(),
        )
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Adds `a + b·(ω − ω_c)` to every sample.
    pub fn add_affine(&self, a: T, b: T) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| *v + a + b * self.grid.offset(i))
                .collect(),
        }
    }
}

/// `Σ w_i ω_i / Σ w_i`, computed on offsets to keep precision at optical frequencies.
pub fn weighted_centroid<T: Real>(grid: &FrequencyGrid<T>, weights: &[T]) -> T {
    let total: T = weights.iter().copied().sum();
    let moment: T = weights
        .iter()
        .enumerate()
        .map(|(i, w)| *w * grid.offset(i))
        .sum();
    grid.center_frequency() + moment / total
}

/// `√(I₁·I₂)` of the unit-area versions of both spectra.
pub fn equivalent_magnitude<T: Real>(
    i1: &IntensitySpectrum<T>,
    i2: &IntensitySpectrum<T>,
) -> Result<Vec<T>> {
    if i1.grid() != i2.grid() {
        return Err(Error::GridMismatch(
            "intensity spectra are sampled on different grids".into(),
        ));
    }
    let (a, b) = (i1.normalized(), i2.normalized());
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (*x * *y).sqrt())
        .collect())
}
