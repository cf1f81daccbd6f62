use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RetrievalConfig;
use super::ops::{
    adapted_magnitude, descend, flip_values, mask_weights, phase_of, restricted_rms, unit,
    unwrap_from, weighted_rms,
};
use crate::error::{Error, Result};
use crate::forward::{DipPattern, StateCombination};
use crate::grid::{check_finite, FrequencyGrid, TimeGrid};
use crate::interp::Pchip;
use crate::scalar::Real;
use crate::spectrum::{weighted_centroid, PhaseSpectrum};
use crate::transform::FourierPair;

/// Measured `|G|` resampled onto a delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTarget<T> {
    /// `|G(τ_m)|` on the time grid, before amplitude scaling.
    pub big_g_mag: Vec<T>,
    /// Delay subtracted from every measured delay.
    pub shift: T,
    /// `|G|` at the measured delays.
    pub measured: Vec<T>,
}

/// Converts a dip into `|G| = √((1 − N_c)/f)` on `time`.
///
/// Samples consistent with zero visibility within `noise_floor_sigmas`
/// standard errors are set to zero; the dip is then interpolated with a
/// monotone cubic and zero-extended beyond the measured delays.
pub fn prepare_target<T: Real>(
    time: &TimeGrid<T>,
    dip: &DipPattern<T>,
    combo: StateCombination<T>,
    config: &RetrievalConfig,
) -> Result<PreparedTarget<T>> {
    combo.validate()?;
    if dip.len() < 2 {
        return Err(Error::InvalidInput("dip needs at least two delays".into()));
    }
    let f = combo.visibility_factor();
    let z = T::lit(config.noise_floor_sigmas);
    let tol = T::lit(config.consistency_tolerance);
    let mut offending = Vec::new();
    let measured: Vec<T> = dip
        .nc_values()
        .iter()
        .enumerate()
        .map(|(i, nc)| {
            let v = (T::one() - *nc) / f;
            let sigma = dip.std_errors().map_or(T::zero(), |s| s[i] / f);
            if v > T::one() + tol + z * sigma {
                offending.push(dip.delays()[i].as_f64());
            }
            if v < z * sigma {
                T::zero()
            } else {
                v.max(T::zero()).sqrt()
            }
        })
        .collect();
    if !offending.is_empty() {
        return Err(Error::InconsistentDip {
            offending_delays: offending,
        });
    }
    if measured.iter().all(|m| *m == T::zero()) {
        return Err(Error::Degenerate(
            "dip shows no interference; |G| carries no phase information".into(),
        ));
    }
    let shift = if config.align_minimum {
        dip.delays()[dip.argmin()]
    } else {
        T::zero()
    };
    let aligned: Vec<T> = dip.delays().iter().map(|t| *t - shift).collect();
    let curve = Pchip::new(aligned, measured.clone())?;
    let big_g_mag: Vec<T> = time
        .delays()
        .into_iter()
        .map(|tau| curve.eval(tau).map_or(T::zero(), |v| v.max(T::zero())))
        .collect();
    if big_g_mag.iter().all(|m| *m == T::zero()) {
        return Err(Error::Degenerate(
            "measured delays do not overlap the delay grid".into(),
        ));
    }
    Ok(PreparedTarget {
        big_g_mag,
        shift,
        measured,
    })
}

/// Outcome of one random start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary<T> {
    pub seed: u64,
    /// Residual of the selected orientation.
    pub residual: T,
    pub residual_direct: T,
    pub residual_flipped: T,
    pub flipped: bool,
    pub ambiguous: bool,
    pub fitted_amplitude: T,
    pub cluster: usize,
}

/// Reconstructed phase and diagnostics of the winning start.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult<T> {
    /// Detrended phase difference.
    pub psd: PhaseSpectrum<T>,
    pub residual: T,
    /// Residual before every iteration of the winning start.
    pub residual_history: Vec<T>,
    pub restart_index: usize,
    /// Whether the flipped orientation was selected.
    pub flipped: bool,
    /// Both orientations fit the data equally well; `psd` is the unflipped one.
    pub ambiguous: bool,
    /// Scale applied to the measured `|G|`.
    pub fitted_amplitude: T,
    /// Delay by which the dip was translated before retrieval.
    pub alignment_shift: T,
    pub cluster_count: usize,
    pub cluster_size: usize,
    pub restarts: Vec<RestartSummary<T>>,
    /// Amplitude-scaled target `|G|` on the delay grid.
    pub target_big_g_mag: Vec<T>,
    /// Error weights used for detrending and clustering.
    pub weights: Vec<T>,
}

struct Outcome<T> {
    summary: RestartSummary<T>,
    psd: Vec<T>,
    history: Vec<T>,
}

struct Solver<'a, T: Real> {
    pair: FourierPair<T>,
    g_mag: &'a [T],
    target: Vec<T>,
    /// Factor from `√V` units to transform units.
    scale: T,
    peak: T,
    threshold: T,
    config: &'a RetrievalConfig,
    big: Vec<Complex<T>>,
    back: Vec<Complex<T>>,
    g: Vec<Complex<T>>,
}

impl<T: Real> Solver<'_, T> {
    fn set_target(&mut self, target: Vec<T>, scale: T) {
        self.scale = scale;
        let peak = target.iter().copied().fold(T::zero(), T::max);
        self.peak = peak;
        self.threshold = T::lit(self.config.adapted_threshold_fraction) * peak;
        self.target = target;
    }

    /// Transforms `m·exp(iφ)` into `self.big` and returns the residual.
    fn transform(&mut self, phases: &[T]) -> T {
        for ((g, m), p) in self.g.iter_mut().zip(self.g_mag).zip(phases) {
            *g = Complex::from_polar(*m, *p);
        }
        self.pair.forward_into(&self.g, &mut self.big);
        restricted_rms(&self.big, &self.target, self.threshold).unwrap_or(T::zero())
    }

    /// Replaces the magnitudes in `self.big` and inverts into `self.back`.
    fn project(&mut self, relaxed: bool) {
        for (z, m) in self.big.iter_mut().zip(&self.target) {
            let r = if relaxed {
                // the blend is defined for |G| = √V, not for transform units
                let s = self.scale;
                s * adapted_magnitude(*m / s, z.norm() / s, self.threshold / s)
            } else {
                *m
            };
            *z = unit(*z) * r;
        }
        self.pair.inverse_into(&self.big, &mut self.back);
    }

    fn back_phases(&self) -> Vec<T> {
        self.back.iter().map(|z| phase_of(*z)).collect()
    }

    fn converged(&self, r: T, last: T) -> bool {
        (r - last).abs() < T::lit(self.config.convergence_tolerance) * self.peak
    }

    fn run(&mut self, mut phases: Vec<T>, raw_target: &[T], history: &mut Vec<T>) -> (Vec<T>, T) {
        let cfg = self.config;
        let mut amplitude = T::one();
        let mut last = T::infinity();
        for _ in 0..cfg.gs_iterations {
            let r = self.transform(&phases);
            history.push(r);
            if self.converged(r, last) {
                break;
            }
            last = r;
            self.project(false);
            phases = self.back_phases();
        }
        if cfg.fit_amplitude && cfg.gs_iterations > 0 {
            self.transform(&phases);
            let num: T = raw_target
                .iter()
                .zip(&self.big)
                .map(|(t, z)| *t * z.norm())
                .sum();
            let den: T = raw_target.iter().map(|t| *t * *t).sum();
            if num > T::zero() && den > T::zero() {
                amplitude = num / den;
                let scale = self.scale * amplitude;
                self.set_target(raw_target.iter().map(|t| *t * amplitude).collect(), scale);
            }
        }
        let step = T::lit(cfg.gp_step_size);
        let beta = T::lit(cfg.gp_momentum);
        let mut prev = phases.clone();
        last = T::infinity();
        for _ in 0..cfg.gp_iterations {
            let y: Vec<T> = phases
                .iter()
                .zip(&prev)
                .map(|(p, q)| *p + beta * wrap(*p - *q))
                .collect();
            let r = self.transform(&y);
            history.push(r);
            if self.converged(r, last) {
                break;
            }
            last = r;
            self.project(false);
            let next = descend(&y, self.g_mag, &self.back, step, cfg.gp_max_halvings);
            prev = std::mem::replace(&mut phases, next);
        }
        last = T::infinity();
        for _ in 0..cfg.adapted_iterations {
            let r = self.transform(&phases);
            history.push(r);
            if self.converged(r, last) {
                break;
            }
            last = r;
            self.project(true);
            phases = self.back_phases();
        }
        (phases, amplitude)
    }
}

/// `|G|` evaluated exactly at the measured delays, for scoring candidates.
struct DelayProbe<T> {
    /// `Δω·exp(i(ω_n − ω_c)τ_k)`, delay-major.
    kernel: Vec<Complex<T>>,
    measured: Vec<T>,
    peak: T,
    count: usize,
}

impl<T: Real> DelayProbe<T> {
    fn new(grid: &FrequencyGrid<T>, dip: &DipPattern<T>, prepared: &PreparedTarget<T>) -> Self {
        let n = grid.count();
        let mut kernel = Vec::with_capacity(n * dip.len());
        for t in dip.delays() {
            let tau = (*t - prepared.shift).as_f64();
            for i in 0..n {
                let (s, c) = (grid.offset(i).as_f64() * tau).sin_cos();
                kernel.push(Complex::new(T::lit(c), T::lit(s)) * grid.spacing());
            }
        }
        Self {
            kernel,
            peak: prepared.measured.iter().copied().fold(T::zero(), T::max),
            measured: prepared.measured.clone(),
            count: n,
        }
    }

    /// RMS of `|G| − amplitude·measured` over the measured delays.
    fn residual(&self, g_mag: &[T], phases: &[T], amplitude: T) -> T {
        let g: Vec<Complex<T>> = g_mag
            .iter()
            .zip(phases)
            .map(|(m, p)| Complex::from_polar(*m, *p))
            .collect();
        let sum: T = self
            .kernel
            .chunks_exact(self.count)
            .zip(&self.measured)
            .map(|(row, m)| {
                let z: Complex<T> = row.iter().zip(&g).map(|(k, v)| *k * *v).sum();
                let d = z.norm() - amplitude * *m;
                d * d
            })
            .sum();
        (sum / T::from_usize_lossy(self.measured.len())).sqrt()
    }
}

fn wrap<T: Real>(x: T) -> T {
    let tau = T::TAU();
    x - tau * ((x + T::PI()) / tau).floor()
}

/// Multi-start composite retrieval of the phase difference from `|g|` and a dip.
///
/// `measured_g_mag` is `√(I₁I₂)` on `grid`. Every restart runs the error-reduction,
/// accelerated gradient and relaxed stages in turn, then compares its phase
/// with the point-reflected candidate and keeps the better-fitting orientation.
/// The start with the smallest residual wins.
pub fn run_retrieval<T: Real>(
    grid: &FrequencyGrid<T>,
    measured_g_mag: &[T],
    measured_dip: &DipPattern<T>,
    combo: StateCombination<T>,
    config: &RetrievalConfig,
) -> Result<RetrievalResult<T>> {
    config.validate()?;
    if measured_g_mag.len() != grid.count() {
        return Err(Error::GridMismatch(format!(
            "{} spectral magnitudes for a grid of {}",
            measured_g_mag.len(),
            grid.count()
        )));
    }
    check_finite(measured_g_mag)?;
    if measured_g_mag.iter().any(|m| *m < T::zero())
        || !measured_g_mag.iter().any(|m| *m > T::zero())
    {
        return Err(Error::OutOfRange(
            "spectral magnitude must be non-negative and not identically zero".into(),
        ));
    }
    let time = grid.conjugate();
    let prepared = prepare_target(&time, measured_dip, combo, config)?;

    // Parseval fixes the initial scale of the measured |G|
    let spectral_energy: T = grid.spacing() * measured_g_mag.iter().map(|m| *m * *m).sum::<T>();
    let temporal_energy: T =
        time.spacing() / T::TAU() * prepared.big_g_mag.iter().map(|m| *m * *m).sum::<T>();
    let initial_scale = (spectral_energy / temporal_energy).sqrt();
    let raw_target: Vec<T> = prepared
        .big_g_mag
        .iter()
        .map(|m| *m * initial_scale)
        .collect();

    let weights = mask_weights(measured_g_mag, T::lit(config.intensity_mask_fraction));
    let center = weighted_centroid(grid, measured_g_mag);
    let peak_index = (0..measured_g_mag.len())
        .max_by(|&a, &b| measured_g_mag[a].partial_cmp(&measured_g_mag[b]).unwrap())
        .unwrap_or(0);

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.restarts).map(|_| master.random()).collect();
    let pair = FourierPair::new(*grid);
    let probe = DelayProbe::new(grid, measured_dip, &prepared);

    let mut outcomes: Vec<Outcome<T>> = seeds
        .par_iter()
        .map(|&seed| {
            let n = grid.count();
            let zero = Complex::new(T::zero(), T::zero());
            let mut solver = Solver {
                pair: pair.clone(),
                g_mag: measured_g_mag,
                target: Vec::new(),
                scale: T::one(),
                peak: T::zero(),
                threshold: T::zero(),
                config,
                big: vec![zero; n],
                back: vec![zero; n],
                g: vec![zero; n],
            };
            solver.set_target(raw_target.clone(), initial_scale);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start: Vec<T> = (0..n)
                .map(|_| T::lit(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
                .collect();
            let mut history = Vec::new();
            let (phases, amplitude_fit) = solver.run(start, &raw_target, &mut history);
            let direct = unwrap_from(&phases, peak_index);
            let flipped = flip_values(grid, &direct, center);
            let amplitude = initial_scale * amplitude_fit;
            let residual_direct = probe.residual(measured_g_mag, &direct, amplitude);
            let residual_flipped = probe.residual(measured_g_mag, &flipped, amplitude);
            let ambiguous = (residual_direct - residual_flipped).abs()
                <= T::lit(config.ambiguity_tolerance) * amplitude * probe.peak;
            let use_flip = !ambiguous && residual_flipped < residual_direct;
            let chosen = if use_flip { flipped } else { direct };
            let psd = PhaseSpectrum::new(*grid, chosen)?;
            let psd = super::ops::detrend(&psd, &weights)?.into_values();
            Ok(Outcome {
                summary: RestartSummary {
                    seed,
                    residual: if use_flip {
                        residual_flipped
                    } else {
                        residual_direct
                    },
                    residual_direct,
                    residual_flipped,
                    flipped: use_flip,
                    ambiguous,
                    fitted_amplitude: initial_scale * amplitude_fit,
                    cluster: 0,
                },
                psd,
                history,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        outcomes[a]
            .summary
            .residual
            .partial_cmp(&outcomes[b].summary.residual)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut representatives: Vec<usize> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let tol = T::lit(config.cluster_tolerance);
    for &i in &order {
        let hit = representatives
            .iter()
            .position(|&r| weighted_rms(&outcomes[i].psd, &outcomes[r].psd, &weights) < tol);
        let cluster = match hit {
            Some(c) => {
                sizes[c] += 1;
                c
            }
            None => {
                representatives.push(i);
                sizes.push(1);
                sizes.len() - 1
            }
        };
        outcomes[i].summary.cluster = cluster;
    }

    let winner = order[0];
    let amplitude = outcomes[winner].summary.fitted_amplitude;
    let noise = measured_dip.std_errors();
    let f = combo.visibility_factor();
    let z = T::lit(config.noise_floor_sigmas);
    // |G| can never exceed Δω·Σ|g|; a fitted dip deeper than that contradicts |g|
    let ceiling = grid.spacing() * measured_g_mag.iter().copied().sum::<T>();
    let offending: Vec<f64> = prepared
        .measured
        .iter()
        .enumerate()
        .filter(|(i, m)| {
            let ratio = amplitude * **m / ceiling;
            let sigma = noise.map_or(T::zero(), |s| s[*i] / f);
            ratio * ratio > T::one() + T::lit(config.consistency_tolerance) + z * sigma
        })
        .map(|(i, _)| measured_dip.delays()[i].as_f64())
        .collect();
    if !offending.is_empty() {
        return Err(Error::InconsistentDip {
            offending_delays: offending,
        });
    }

    let win = &outcomes[winner];
    let result = RetrievalResult {
        psd: PhaseSpectrum::new(*grid, win.psd.clone())?,
        residual: win.summary.residual,
        residual_history: win.history.clone(),
        restart_index: winner,
        flipped: win.summary.flipped,
        ambiguous: win.summary.ambiguous,
        fitted_amplitude: amplitude,
        alignment_shift: prepared.shift,
        cluster_count: representatives.len(),
        cluster_size: sizes[win.summary.cluster],
        restarts: outcomes.iter().map(|o| o.summary.clone()).collect(),
        target_big_g_mag: prepared.big_g_mag.iter().map(|m| *m * amplitude).collect(),
        weights,
    };
    Ok(result)
}
