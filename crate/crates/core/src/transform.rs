//! Discrete Fourier pair between a [`FrequencyGrid`] and its conjugate [`TimeGrid`].
//!
//! Forward: `G(τ_m) = Δω · Σ_n g(ω_n) · exp(+i ω_n τ_m)`.
//! Inverse: `g(ω_n) = Δτ/(2π) · Σ_m G(τ_m) · exp(−i ω_n τ_m)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{check_finite_complex, DelaySeries, FrequencyGrid, SpectralSeries, TimeGrid};
use crate::scalar::Real;

/// Planned transforms for one grid pair, reusable across many calls.
///
/// Cloning is cheap; clones share the FFT plans but own their scratch space.
#[derive(Clone)]
pub struct FourierPair<T: Real> {
    freq: FrequencyGrid<T>,
    time: TimeGrid<T>,
    positive: Arc<dyn Fft<T>>,
    negative: Arc<dyn Fft<T>>,
    // exp(i ω_c τ_m)
    carrier: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for FourierPair<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierPair")
            .field("freq", &self.freq)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

impl<T: Real> FourierPair<T> {
    pub fn new(freq: FrequencyGrid<T>) -> Self {
        let n = freq.count();
        let mut planner = FftPlanner::new();
        let positive = planner.plan_fft_inverse(n);
        let negative = planner.plan_fft_forward(n);
        let scratch_len = positive
            .get_inplace_scratch_len()
            .max(negative.get_inplace_scratch_len());
        let time = freq.conjugate();
        let wc = freq.center_frequency().as_f64();
        let carrier = (0..n)
            .map(|m| {
                let (s, c) = (wc * time.delay(m).as_f64()).sin_cos();
                Complex::new(T::lit(c), T::lit(s))
            })
            .collect();
        Self {
            freq,
            time,
            positive,
            negative,
            carrier,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    pub fn frequency_grid(&self) -> &FrequencyGrid<T> {
        &self.freq
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    /// Spectral samples to delay samples, written into `out`.
    ///
    /// # Panics
    /// If either slice length differs from the grid count.
    pub fn forward_into(&mut self, g: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.freq.count();
        assert_eq!(g.len(), n, "input length");
        assert_eq!(out.len(), n, "output length");
        out.copy_from_slice(g);
        out.rotate_left(n / 2);
        self.positive.process_with_scratch(out, &mut self.scratch);
        out.rotate_left(n / 2);
        let dw = self.freq.spacing();
        for (v, c) in out.iter_mut().zip(&self.carrier) {
            *v = *v * *c * dw;
        }
    }

    /// Delay samples to spectral samples, written into `out`.
    ///
    /// # Panics
    /// If either slice length differs from the grid count.
    pub fn inverse_into(&mut self, big_g: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.freq.count();
        assert_eq!(big_g.len(), n, "input length");
        assert_eq!(out.len(), n, "output length");
        for ((o, v), c) in out.iter_mut().zip(big_g).zip(&self.carrier) {
            *o = *v * c.conj();
        }
        out.rotate_left(n / 2);
        self.negative.process_with_scratch(out, &mut self.scratch);
        out.rotate_left(n / 2);
        let scale = self.time.spacing() / T::TAU();
        for v in out.iter_mut() {
            *v = *v * scale;
        }
    }

    pub fn forward(&mut self, g: &SpectralSeries<T>) -> Result<DelaySeries<T>> {
        if *g.grid() != self.freq {
            return Err(Error::GridMismatch(
                "spectral series is not on this transform's frequency grid".into(),
            ));
        }
        check_finite_complex(g.values())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); g.len()];
        self.forward_into(g.values(), &mut out);
        Ok(DelaySeries::from_parts_unchecked(self.time, out))
    }

    pub fn inverse(&mut self, big_g: &DelaySeries<T>) -> Result<SpectralSeries<T>> {
        if *big_g.grid() != self.time {
            return Err(Error::GridMismatch(
                "delay series is not on this transform's time grid".into(),
            ));
        }
        check_finite_complex(big_g.values())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); big_g.len()];
        self.inverse_into(big_g.values(), &mut out);
        Ok(SpectralSeries::from_parts_unchecked(self.freq, out))
    }
}

/// One-shot forward transform; plan a [`FourierPair`] for repeated use.
pub fn forward_transform<T: Real>(g: &SpectralSeries<T>) -> Result<DelaySeries<T>> {
    FourierPair::new(*g.grid()).forward(g)
}

/// One-shot inverse transform; plan a [`FourierPair`] for repeated use.
pub fn inverse_transform<T: Real>(big_g: &DelaySeries<T>) -> Result<SpectralSeries<T>> {
    FourierPair::new(*big_g.grid().frequency_grid()).inverse(big_g)
}

/// `Δω · Σ_n g(ω_n) · exp(+i ω_n τ)` at an arbitrary delay.
///
/// The carrier `exp(i ω_c τ)` is factored out so only the offsets enter the
/// per-sample phase; summation is carried out in `f64`.
pub fn evaluate_at_delay<T: Real>(g: &SpectralSeries<T>, tau: f64) -> Complex<f64> {
    let grid = g.grid();
    let mut acc = Complex::new(0.0, 0.0);
    for (i, v) in g.values().iter().enumerate() {
        let (s, c) = (grid.offset(i).as_f64() * tau).sin_cos();
        acc += Complex::new(v.re.as_f64(), v.im.as_f64()) * Complex::new(c, s);
    }
    let (s, c) = (grid.center_frequency().as_f64() * tau).sin_cos();
    acc * Complex::new(c, s) * grid.spacing().as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_series(n: usize, seed: u64) -> SpectralSeries<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = FrequencyGrid::new(2.0 * PI * 193.19e12, 2.0 * PI * 1e9, n).unwrap();
        let v = (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralSeries::new(grid, v).unwrap()
    }

    fn naive_forward(g: &SpectralSeries<f64>) -> Vec<Complex<f64>> {
        let grid = *g.grid();
        let t = grid.conjugate();
        (0..grid.count())
            .map(|m| {
                let mut acc = Complex::new(0.0, 0.0);
                for (n, v) in g.values().iter().enumerate() {
                    acc += v * Complex::from_polar(1.0, grid.frequency(n) * t.delay(m));
                }
                acc * grid.spacing()
            })
            .collect()
    }

    #[test]
    fn round_trip_is_identity() {
        for (k, n) in [8usize, 16, 64, 256, 1024, 4096].into_iter().enumerate() {
            let g = random_series(n, k as u64);
            let back = inverse_transform(&forward_transform(&g).unwrap()).unwrap();
            let scale = g.magnitudes().into_iter().fold(0.0, f64::max);
            for (a, b) in g.values().iter().zip(back.values()) {
                assert!((a - b).norm() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn matches_naive_sum() {
        let g = random_series(64, 7);
        let fast = forward_transform(&g).unwrap();
        let slow = naive_forward(&g);
        let scale = slow.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).norm() / scale < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn parseval_holds() {
        let g = random_series(512, 3);
        let big = forward_transform(&g).unwrap();
        let lhs: f64 = g.grid().spacing() * g.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let rhs: f64 = big.grid().spacing() / (2.0 * PI)
            * big.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() / lhs < 1e-10);
    }

    #[test]
    fn single_bin_has_flat_magnitude() {
        let grid = FrequencyGrid::new(5.0f64, 0.25, 32).unwrap();
        let mut v = vec![Complex::new(0.0, 0.0); 32];
        v[16] = Complex::new(1.0, 0.0);
        let big = forward_transform(&SpectralSeries::new(grid, v).unwrap()).unwrap();
        for z in big.values() {
            assert!((z.norm() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_delay_series_concentrates_in_one_bin() {
        let grid = FrequencyGrid::new(0.0, 1.0, 16).unwrap();
        let t = grid.conjugate();
        let big = DelaySeries::new(t, vec![Complex::new(1.0, 0.0); 16]).unwrap();
        let g = inverse_transform(&big).unwrap();
        let mags = g.magnitudes();
        assert!(mags[8] > 0.1);
        for (i, m) in mags.iter().enumerate() {
            if i != 8 {
                assert!(*m < 1e-14);
            }
        }
    }

    #[test]
    fn even_real_input_gives_even_magnitude() {
        let grid = FrequencyGrid::new(3.0f64, 0.5, 64).unwrap();
        let v = (0..64)
            .map(|i| Complex::new((-(grid.offset(i) / 4.0).powi(2)).exp(), 0.0))
            .collect::<Vec<_>>();
        // index 0 has no mirror partner on a shifted grid; zero it
        let mut v = v;
        v[0] = Complex::new(0.0, 0.0);
        let g = SpectralSeries::new(grid, v).unwrap();
        let big = forward_transform(&g).unwrap();
        let t = big.grid();
        for m in 1..64 {
            let mirror = 64 - m;
            assert!((big.values()[m].norm() - big.values()[mirror].norm()).abs() < 1e-13);
            let unrotated = big.values()[m] * Complex::from_polar(1.0, -3.0 * t.delay(m));
            assert!(unrotated.im.abs() < 1e-13);
        }
    }

    #[test]
    fn linear_phase_translates_magnitude() {
        let grid = FrequencyGrid::new(0.0f64, 0.1, 128).unwrap();
        let t = grid.conjugate();
        let base: Vec<Complex<f64>> = (0..128)
            .map(|i| Complex::new((-(grid.offset(i)).powi(2)).exp(), 0.0))
            .collect();
        let shift = 5usize;
        let tau0 = shift as f64 * t.spacing();
        let shifted: Vec<Complex<f64>> = base
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex::from_polar(1.0, grid.frequency(i) * tau0))
            .collect();
        let a = forward_transform(&SpectralSeries::new(grid, base).unwrap()).unwrap();
        let b = forward_transform(&SpectralSeries::new(grid, shifted).unwrap()).unwrap();
        for m in 0..128 {
            let src = (m + shift) % 128;
            assert!((b.values()[m].norm() - a.values()[src].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_evaluation_matches_grid_points() {
        let g = random_series(128, 11);
        let big = forward_transform(&g).unwrap();
        for m in [0usize, 17, 64, 100] {
            let direct = evaluate_at_delay(&g, big.grid().delay(m));
            assert!((direct - big.values()[m]).norm() < 1e-9 * big.values()[m].norm().max(1.0));
        }
    }

    #[test]
    fn rejects_foreign_grid() {
        let g = random_series(16, 1);
        let other = FrequencyGrid::new(0.0, 1.0, 16).unwrap();
        let mut pair = FourierPair::new(other);
        assert!(matches!(pair.forward(&g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn single_precision_round_trip() {
        let grid = FrequencyGrid::new(0.0f32, 0.5, 256).unwrap();
        let v: Vec<Complex<f32>> = (0..256)
            .map(|i| Complex::new((i as f32 * 0.37).sin(), (i as f32 * 0.11).cos()))
            .collect();
        let g = SpectralSeries::new(grid, v).unwrap();
        let back = inverse_transform(&forward_transform(&g).unwrap()).unwrap();
        for (a, b) in g.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-5);
        }
    }
}
