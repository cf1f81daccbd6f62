//! Uniform sampling lattices in angular frequency and delay.
//!
//! Both lattices store samples in "shifted" order: the centre sample sits at
//! index `N/2`, so sample `i` of a [`FrequencyGrid`] is
//! `ω_i = ω_c + (i − N/2)·Δω` and sample `m` of its conjugate [`TimeGrid`] is
//! `τ_m = (m − N/2)·Δτ` with `Δτ = 2π / (N·Δω)`.

use std::fmt::Debug;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest supported lattice size.
pub const MIN_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    center: T,
    spacing: T,
    count: usize,
}

impl<T: Real> FrequencyGrid<T> {
    /// `center_frequency` and `spacing` are angular frequencies in rad/s.
    pub fn new(center_frequency: T, spacing: T, count: usize) -> Result<Self> {
        if !center_frequency.is_finite() {
            return Err(Error::InvalidGrid("center frequency must be finite".into()));
        }
        if !(spacing.is_finite() && spacing > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if count < MIN_COUNT || !count.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "count must be a power of two >= {MIN_COUNT}, got {count}"
            )));
        }
        Ok(Self {
            center: center_frequency,
            spacing,
            count,
        })
    }

    pub fn center_frequency(&self) -> T {
        self.center
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn center_index(&self) -> usize {
        self.count / 2
    }

    /// Offset of sample `i` from the centre frequency, `(i − N/2)·Δω`.
    pub fn offset(&self, i: usize) -> T {
        signed_index::<T>(i, self.count) * self.spacing
    }

    pub fn frequency(&self, i: usize) -> T {
        self.center + self.offset(i)
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.count).map(|i| self.frequency(i)).collect()
    }

    /// Lowest and highest sample frequency.
    pub fn span(&self) -> (T, T) {
        (self.frequency(0), self.frequency(self.count - 1))
    }

    pub fn contains(&self, omega: T) -> bool {
        let (lo, hi) = self.span();
        omega >= lo && omega <= hi
    }

    /// Fractional sample position of `omega`.
    pub fn position(&self, omega: T) -> T {
        (omega - self.center) / self.spacing + T::from_usize_lossy(self.count / 2)
    }

    pub fn conjugate(&self) -> TimeGrid<T> {
        conjugate_time_grid(self)
    }
}

/// Delay lattice conjugate to a [`FrequencyGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    spacing: T,
    conjugate: FrequencyGrid<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.conjugate.count
    }

    pub fn center_index(&self) -> usize {
        self.count() / 2
    }

    /// The frequency grid this lattice was derived from.
    pub fn frequency_grid(&self) -> &FrequencyGrid<T> {
        &self.conjugate
    }

    pub fn delay(&self, m: usize) -> T {
        signed_index::<T>(m, self.count()) * self.spacing
    }

    pub fn delays(&self) -> Vec<T> {
        (0..self.count()).map(|m| self.delay(m)).collect()
    }

    pub fn span(&self) -> (T, T) {
        (self.delay(0), self.delay(self.count() - 1))
    }

    /// Index of the sample nearest to `tau`, if `tau` lies on the lattice span.
    pub fn nearest_index(&self, tau: T) -> Option<usize> {
        let pos = tau / self.spacing + T::from_usize_lossy(self.center_index());
        let idx = pos.round();
        if idx < T::zero() || idx > T::from_usize_lossy(self.count() - 1) {
            return None;
        }
        idx.to_usize()
    }
}

/// Delay lattice with `Δτ = 2π/(N·Δω)` and the same sample count.
pub fn conjugate_time_grid<T: Real>(freq: &FrequencyGrid<T>) -> TimeGrid<T> {
    let n = T::from_usize_lossy(freq.count);
    TimeGrid {
        spacing: T::TAU() / (n * freq.spacing),
        conjugate: *freq,
    }
}

fn signed_index<T: Real>(i: usize, count: usize) -> T {
    T::from_usize_lossy(i) - T::from_usize_lossy(count / 2)
}

/// Anything a series can be sampled on.
pub trait SampleGrid: Copy + PartialEq + Debug {
    fn sample_count(&self) -> usize;
}

impl<T: Real> SampleGrid for FrequencyGrid<T> {
    fn sample_count(&self) -> usize {
        self.count
    }
}

impl<T: Real> SampleGrid for TimeGrid<T> {
    fn sample_count(&self) -> usize {
        self.count()
    }
}

/// Complex amplitudes on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries<T, G> {
    grid: G,
    values: Vec<Complex<T>>,
}

/// Complex series on a [`FrequencyGrid`], e.g. a cross-spectral density.
pub type SpectralSeries<T> = ComplexSeries<T, FrequencyGrid<T>>;
/// Complex series on a [`TimeGrid`], e.g. a cross-correlation.
pub type DelaySeries<T> = ComplexSeries<T, TimeGrid<T>>;

impl<T: Real, G: SampleGrid> ComplexSeries<T, G> {
    pub fn new(grid: G, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.sample_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.sample_count()
            )));
        }
        check_finite_complex(&values)?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: G, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(values.len(), grid.sample_count());
        Self { grid, values }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn phases(&self) -> Vec<T> {
        self.values.iter().map(|z| z.arg()).collect()
    }
}

pub(crate) fn check_finite_complex<T: Real>(values: &[Complex<T>]) -> Result<()> {
    match values
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_finite<T: Real>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
