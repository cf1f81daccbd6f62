//! Single iteration steps and the post-processing applied to their output.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{check_finite, FrequencyGrid, SpectralSeries};
use crate::interp::Linear;
use crate::scalar::Real;
use crate::spectrum::PhaseSpectrum;
use crate::transform::FourierPair;

/// `z/|z|`, or one where `z` vanishes.
pub(crate) fn unit<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r > T::zero() {
        z / r
    } else {
        Complex::new(T::one(), T::zero())
    }
}

/// Argument of `z`, zero where `z` vanishes.
pub(crate) fn phase_of<T: Real>(z: Complex<T>) -> T {
    if z.norm_sqr() > T::zero() {
        z.arg()
    } else {
        T::zero()
    }
}

fn check_targets<T: Real>(n: usize, target_g_mag: &[T], target_big_g_mag: &[T]) -> Result<()> {
    if target_g_mag.len() != n || target_big_g_mag.len() != n {
        return Err(Error::GridMismatch(format!(
            "target magnitudes have {} and {} samples, grid has {n}",
            target_g_mag.len(),
            target_big_g_mag.len()
        )));
    }
    check_finite(target_g_mag)?;
    check_finite(target_big_g_mag)?;
    if target_g_mag
        .iter()
        .chain(target_big_g_mag)
        .any(|v| *v < T::zero())
    {
        return Err(Error::OutOfRange(
            "target magnitudes must be non-negative".into(),
        ));
    }
    Ok(())
}

/// Time-domain magnitude substitution shared by every step.
///
/// Transforms `g`, replaces each `|G_k|` by `replacement(i, |G_k|)`, keeps the
/// phase, and transforms back; returns `g'`.
fn substitute<T: Real>(
    pair: &mut FourierPair<T>,
    g: &[Complex<T>],
    mut replacement: impl FnMut(usize, T) -> T,
) -> Vec<Complex<T>> {
    let n = g.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut big = vec![zero; n];
    pair.forward_into(g, &mut big);
    for (i, z) in big.iter_mut().enumerate() {
        *z = unit(*z) * replacement(i, z.norm());
    }
    let mut back = vec![zero; n];
    pair.inverse_into(&big, &mut back);
    back
}

fn impose_magnitude<T: Real>(target_g_mag: &[T], g_prime: &[Complex<T>]) -> Vec<Complex<T>> {
    target_g_mag
        .iter()
        .zip(g_prime)
        .map(|(m, z)| unit(*z) * *m)
        .collect()
}

/// One error-reduction iteration: impose `|G|` in time, then `|g|` in frequency.
pub fn gs_step<T: Real>(
    g_k: &SpectralSeries<T>,
    target_g_mag: &[T],
    target_big_g_mag: &[T],
) -> Result<SpectralSeries<T>> {
    check_targets(g_k.len(), target_g_mag, target_big_g_mag)?;
    let mut pair = FourierPair::new(*g_k.grid());
    let g_prime = substitute(&mut pair, g_k.values(), |i, _| target_big_g_mag[i]);
    SpectralSeries::new(*g_k.grid(), impose_magnitude(target_g_mag, &g_prime))
}

/// Like [`gs_step`], but samples whose target `|G|` is below `threshold` are
/// replaced by `½|G|² + (1 − ½|G|)·|G_k|` instead of `|G|`.
///
/// The blend assumes `|G| = √V`, which holds for unit-area spectra.
pub fn adapted_gs_step<T: Real>(
    g_k: &SpectralSeries<T>,
    target_g_mag: &[T],
    target_big_g_mag: &[T],
    threshold: T,
) -> Result<SpectralSeries<T>> {
    check_targets(g_k.len(), target_g_mag, target_big_g_mag)?;
    if !(threshold >= T::zero()) {
        return Err(Error::OutOfRange("threshold must be non-negative".into()));
    }
    let mut pair = FourierPair::new(*g_k.grid());
    let g_prime = substitute(&mut pair, g_k.values(), |i, current| {
        adapted_magnitude(target_big_g_mag[i], current, threshold)
    });
    SpectralSeries::new(*g_k.grid(), impose_magnitude(target_g_mag, &g_prime))
}

/// Replacement magnitude of the relaxed substitution at one delay sample.
///
/// Magnitudes are in units where `|G| = √V`, so the blend weights stay in `[½, 1]`.
pub fn adapted_magnitude<T: Real>(measured: T, current: T, threshold: T) -> T {
    if measured >= threshold {
        measured
    } else {
        let half = T::lit(0.5);
        half * measured * measured + (T::one() - half * measured) * current
    }
}

/// `Z(φ) = Σ |m·exp(iφ) − g'|²`.
pub fn phase_distance<T: Real>(phases: &[T], target_g_mag: &[T], g_prime: &[Complex<T>]) -> T {
    phases
        .iter()
        .zip(target_g_mag)
        .zip(g_prime)
        .map(|((p, m), z)| (Complex::from_polar(*m, *p) - *z).norm_sqr())
        .sum()
}

/// `∂Z/∂φ_i = 2·|g'_i|·m_i·sin(φ_i − arg g'_i)`.
pub fn phase_gradient<T: Real>(phases: &[T], target_g_mag: &[T], g_prime: &[Complex<T>]) -> Vec<T> {
    let two = T::lit(2.0);
    phases
        .iter()
        .zip(target_g_mag)
        .zip(g_prime)
        .map(|((p, m), z)| two * z.norm() * *m * (*p - phase_of(*z)).sin())
        .collect()
}

/// Backtracking descent step on `Z` from `phases` with `g'` held fixed.
///
/// The gradient is divided by `max m²` so `step_size` does not depend on the
/// spectral normalization. The step is halved until `Z` decreases, at most
/// `max_halvings` times; if it never does, the phases are returned unchanged.
pub(crate) fn descend<T: Real>(
    phases: &[T],
    target_g_mag: &[T],
    g_prime: &[Complex<T>],
    step_size: T,
    max_halvings: usize,
) -> Vec<T> {
    let peak = target_g_mag.iter().copied().fold(T::zero(), T::max);
    if peak <= T::zero() {
        return phases.to_vec();
    }
    let scale = T::one() / (peak * peak);
    let grad = phase_gradient(phases, target_g_mag, g_prime);
    let z0 = phase_distance(phases, target_g_mag, g_prime);
    let mut eta = step_size * scale;
    let half = T::lit(0.5);
    for _ in 0..=max_halvings {
        let trial: Vec<T> = phases
            .iter()
            .zip(&grad)
            .map(|(p, d)| *p - eta * *d)
            .collect();
        if phase_distance(&trial, target_g_mag, g_prime) < z0 {
            return trial;
        }
        eta = eta * half;
    }
    phases.to_vec()
}

/// One gradient-projection iteration with backtracking from `step_size`.
pub fn gp_step<T: Real>(
    g_k: &SpectralSeries<T>,
    target_g_mag: &[T],
    target_big_g_mag: &[T],
    step_size: T,
) -> Result<SpectralSeries<T>> {
    check_targets(g_k.len(), target_g_mag, target_big_g_mag)?;
    if !(step_size > T::zero()) || !step_size.is_finite() {
        return Err(Error::OutOfRange("step size must be positive".into()));
    }
    let mut pair = FourierPair::new(*g_k.grid());
    let g_prime = substitute(&mut pair, g_k.values(), |i, _| target_big_g_mag[i]);
    let phases: Vec<T> = g_k.values().iter().map(|z| phase_of(*z)).collect();
    let next = descend(&phases, target_g_mag, &g_prime, step_size, 20);
    SpectralSeries::new(
        *g_k.grid(),
        next.iter()
            .zip(target_g_mag)
            .map(|(p, m)| Complex::from_polar(*m, *p))
            .collect(),
    )
}

/// RMS of `|G_candidate| − measured` over samples with `measured ≥ threshold`.
pub fn residual<T: Real>(
    g_candidate: &SpectralSeries<T>,
    measured_big_g_mag: &[T],
    threshold: T,
) -> Result<T> {
    if measured_big_g_mag.len() != g_candidate.len() {
        return Err(Error::GridMismatch(
            "measured magnitude length differs from the candidate grid".into(),
        ));
    }
    let mut pair = FourierPair::new(*g_candidate.grid());
    let mut big = vec![Complex::new(T::zero(), T::zero()); g_candidate.len()];
    pair.forward_into(g_candidate.values(), &mut big);
    restricted_rms(&big, measured_big_g_mag, threshold)
        .ok_or_else(|| Error::Degenerate("no measured samples above the threshold".into()))
}

pub(crate) fn restricted_rms<T: Real>(
    big: &[Complex<T>],
    measured: &[T],
    threshold: T,
) -> Option<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (z, m) in big.iter().zip(measured) {
        if *m >= threshold {
            let d = z.norm() - *m;
            sum = sum + d * d;
            count += 1;
        }
    }
    (count > 0).then(|| (sum / T::from_usize_lossy(count)).sqrt())
}

/// Removes the weighted least-squares affine trend `a + b·ω`.
pub fn detrend<T: Real>(psd: &PhaseSpectrum<T>, weights: &[T]) -> Result<PhaseSpectrum<T>> {
    let (a, b) = affine_fit(psd.grid(), psd.values(), weights)?;
    Ok(psd.add_affine(-a, -b))
}

/// Weighted least-squares `(a, b)` of `a + b·(ω − ω_c)`.
pub fn affine_fit<T: Real>(grid: &FrequencyGrid<T>, values: &[T], weights: &[T]) -> Result<(T, T)> {
    if weights.len() != values.len() {
        return Err(Error::GridMismatch(
            "weights and phase differ in length".into(),
        ));
    }
    check_finite(weights)?;
    if weights.iter().any(|w| *w < T::zero()) {
        return Err(Error::OutOfRange("weights must be non-negative".into()));
    }
    if weights.iter().filter(|w| **w > T::zero()).count() < 2 {
        return Err(Error::Degenerate(
            "fewer than two samples carry weight".into(),
        ));
    }
    // offsets in units of the grid step keep the normal equations well scaled
    let x: Vec<T> = (0..values.len())
        .map(|i| grid.offset(i) / grid.spacing())
        .collect();
    let sw: T = weights.iter().copied().sum();
    let mx = weights.iter().zip(&x).map(|(w, x)| *w * *x).sum::<T>() / sw;
    let my = weights.iter().zip(values).map(|(w, y)| *w * *y).sum::<T>() / sw;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for ((w, x), y) in weights.iter().zip(&x).zip(values) {
        let dx = *x - mx;
        sxx = sxx + *w * dx * dx;
        sxy = sxy + *w * dx * (*y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((intercept, slope / grid.spacing()))
}

/// `ψ'(ω) = −ψ(2c − ω)`, linearly interpolated, ends held constant.
pub fn flip_candidate<T: Real>(psd: &PhaseSpectrum<T>, center: T) -> Result<PhaseSpectrum<T>> {
    let grid = psd.grid();
    if !grid.contains(center) {
        return Err(Error::OutOfRange(format!(
            "flip center {center} lies outside the grid span"
        )));
    }
    PhaseSpectrum::new(*grid, flip_values(grid, psd.values(), center))
}

pub(crate) fn flip_values<T: Real>(grid: &FrequencyGrid<T>, values: &[T], center: T) -> Vec<T> {
    // work in sample positions so optical carrier magnitudes never enter
    let c = grid.position(center);
    let positions: Vec<T> = (0..values.len()).map(T::from_usize_lossy).collect();
    let table = Linear::new(positions, values.to_vec()).expect("grid positions are increasing");
    (0..values.len())
        .map(|i| -table.eval_clamped(c + c - T::from_usize_lossy(i)))
        .collect()
}

/// Removes `2π` jumps walking outward from sample `start` in both directions.
pub fn unwrap_from<T: Real>(phases: &[T], start: usize) -> Vec<T> {
    let mut out = phases.to_vec();
    if phases.is_empty() {
        return out;
    }
    let tau = T::TAU();
    let pi = T::PI();
    let step = |prev: T, raw: T| {
        let mut d = raw - prev;
        d = d - tau * ((d + pi) / tau).floor();
        prev + d
    };
    for i in start + 1..phases.len() {
        out[i] = step(out[i - 1], phases[i]);
    }
    for i in (0..start).rev() {
        out[i] = step(out[i + 1], phases[i]);
    }
    out
}

/// `√(I₁I₂)` where it reaches `fraction` of its peak, zero elsewhere.
pub fn mask_weights<T: Real>(g_mag: &[T], fraction: T) -> Vec<T> {
    let peak = g_mag.iter().copied().fold(T::zero(), T::max);
    g_mag
        .iter()
        .map(|m| if *m >= fraction * peak { *m } else { T::zero() })
        .collect()
}

/// `√(Σ w (a − b)² / Σ w)`.
pub fn weighted_rms<T: Real>(a: &[T], b: &[T], weights: &[T]) -> T {
    let sw: T = weights.iter().copied().sum();
    let s: T = a
        .iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| *w * (*x - *y) * (*x - *y))
        .sum();
    (s / sw).sqrt()
}
