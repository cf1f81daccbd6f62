//! Parametric phase functions for synthetic experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::interp::Linear;
use crate::scalar::Real;
use crate::spectrum::PhaseSpectrum;

/// A phase function of angular frequency, referenced to `center`.
///
/// All frequency parameters are angular (rad/s); `slope` is in s and
/// `curvature` in s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum PhasePreset<T> {
    Flat,
    /// `slope · (ω − center)`.
    Linear {
        center: T,
        slope: T,
    },
    /// `curvature · (ω − center)²`.
    Quadratic {
        center: T,
        curvature: T,
    },
    /// Piecewise-linear down-up-down profile.
    ///
    /// Knots sit at `center + (−1, −⅓ + skew, ⅓ + skew, 1)·half_width` with
    /// values `(+A, −A, +A, −A)`; the ends are held constant. A positive
    /// `smoothing` convolves the profile with a Gaussian of that standard
    /// deviation.
    InvertedN {
        center: T,
        amplitude: T,
        half_width: T,
        skew: T,
        smoothing: T,
    },
    /// Linear interpolation of a table, ends held constant.
    CustomTable {
        omegas: Vec<T>,
        phases: Vec<T>,
    },
}

impl<T: Real> PhasePreset<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Linear { .. } => "linear",
            Self::Quadratic { .. } => "quadratic",
            Self::InvertedN { .. } => "inverted-n",
            Self::CustomTable { .. } => "custom-table",
        }
    }

    pub fn render(&self, grid: &FrequencyGrid<T>) -> Result<PhaseSpectrum<T>> {
        match self {
            Self::Flat => Ok(PhaseSpectrum::zeros(*grid)),
            Self::Linear { center, slope } => {
                PhaseSpectrum::from_fn(*grid, |w| *slope * (w - *center))
            }
            Self::Quadratic { center, curvature } => PhaseSpectrum::from_fn(*grid, |w| {
                let d = w - *center;
                *curvature * d * d
            }),
            Self::InvertedN {
                center,
                amplitude,
                half_width,
                skew,
                smoothing,
            } => inverted_n(grid, *center, *amplitude, *half_width, *skew, *smoothing),
            Self::CustomTable { omegas, phases } => PhaseSpectrum::resample(*grid, omegas, phases),
        }
    }
}

fn inverted_n<T: Real>(
    grid: &FrequencyGrid<T>,
    center: T,
    amplitude: T,
    half_width: T,
    skew: T,
    smoothing: T,
) -> Result<PhaseSpectrum<T>> {
    let third = T::one() / T::lit(3.0);
    if !(half_width > T::zero()) || !half_width.is_finite() {
        return Err(Error::InvalidInput("half_width must be positive".into()));
    }
    if !(skew.abs() < third) {
        return Err(Error::InvalidInput(format!(
            "skew must lie in (-1/3, 1/3), got {skew}"
        )));
    }
    if !(smoothing >= T::zero()) || !smoothing.is_finite() || !amplitude.is_finite() {
        return Err(Error::InvalidInput(
            "amplitude and smoothing must be finite, smoothing non-negative".into(),
        ));
    }
    let knots_x = [-T::one(), skew - third, skew + third, T::one()]
        .iter()
        .map(|f| center + *f * half_width)
        .collect();
    let knots_y = vec![amplitude, -amplitude, amplitude, -amplitude];
    let table = Linear::new(knots_x, knots_y)?;
    let raw: Vec<T> = grid
        .frequencies()
        .into_iter()
        .map(|w| table.eval_clamped(w))
        .collect();
    let values = if smoothing > T::zero() {
        gaussian_smooth(&raw, smoothing / grid.spacing())
    } else {
        raw
    };
    PhaseSpectrum::new(*grid, values)
}

/// Convolution with a unit-sum Gaussian of `sigma` samples, edges padded by hold.
fn gaussian_smooth<T: Real>(values: &[T], sigma: T) -> Vec<T> {
    // Eight widths put the truncated tail below double precision, so the
    // result does not jump when `5 sigma` crosses an integer.
    let reach = (sigma * T::lit(8.0)).ceil().to_usize().unwrap_or(0);
    if reach == 0 {
        return values.to_vec();
    }
    let kernel: Vec<T> = (0..=2 * reach)
        .map(|k| {
            let x = (T::from_usize_lossy(k) - T::from_usize_lossy(reach)) / sigma;
            (-(x * x) / T::lit(2.0)).exp()
        })
        .collect();
    let norm: T = kernel.iter().copied().sum();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let j = (i + k as isize - reach as isize).clamp(0, n - 1);
                    *w * values[j as usize]
                })
                .sum::<T>()
                / norm
        })
        .collect()
}
