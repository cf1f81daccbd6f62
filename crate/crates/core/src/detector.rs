//! Photon-counting simulation with binomial shot noise.
//!
//! Random draws use [`ChaCha8Rng`] seeded with `seed_from_u64`, so a seed
//! reproduces the same record on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{DipPattern, StateCombination};
use crate::scalar::Real;

/// Measurement settings shared by every delay point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountingBudget {
    /// Pulses per second.
    pub repetition_rate: f64,
    /// Singles rate of each detector, counts per second.
    pub single_rate_target: f64,
    /// Integration time per delay point, seconds.
    pub duration_per_point: f64,
    /// Non-paralyzable detector dead time, seconds. Zero disables it.
    pub dead_time: f64,
    pub seed: u64,
    /// Delays farther than this multiple of the dip half-width from the dip
    /// minimum form the normalization baseline.
    pub baseline_multiple: f64,
    /// Draw the baseline from the simulated counts rather than using its expectation.
    pub include_baseline_noise: bool,
}

impl Default for CountingBudget {
    fn default() -> Self {
        Self {
            repetition_rate: 36.88e6,
            single_rate_target: 1.3e6,
            duration_per_point: 90.0,
            dead_time: 0.0,
            seed: 0,
            baseline_multiple: 3.0,
            include_baseline_noise: true,
        }
    }
}

impl CountingBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.repetition_rate) {
            return Err(Error::InconsistentBudget(
                "repetition rate must be positive".into(),
            ));
        }
        if !positive(self.duration_per_point) {
            return Err(Error::InconsistentBudget(
                "duration per point must be positive".into(),
            ));
        }
        if !positive(self.single_rate_target) || self.single_rate_target >= self.repetition_rate {
            return Err(Error::InconsistentBudget(format!(
                "singles rate {} must be positive and below the repetition rate {}",
                self.single_rate_target, self.repetition_rate
            )));
        }
        if !(self.dead_time.is_finite() && self.dead_time >= 0.0) {
            return Err(Error::InconsistentBudget(
                "dead time must be non-negative".into(),
            ));
        }
        if !positive(self.baseline_multiple) {
            return Err(Error::InconsistentBudget(
                "baseline multiple must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Pulses per delay point.
    pub fn pulses(&self) -> Result<u64> {
        self.validate()?;
        let n = (self.repetition_rate * self.duration_per_point).round();
        if n < 1.0 {
            return Err(Error::InconsistentBudget(
                "fewer than one pulse per point".into(),
            ));
        }
        Ok(n as u64)
    }

    /// Detection probability per pulse for one detector, after dead time.
    pub fn single_probability(&self) -> Result<f64> {
        let rate = apply_dead_time(self.single_rate_target, self.dead_time)?;
        Ok(rate / self.repetition_rate)
    }

    /// Expected baseline coincidences per point (`N_c = 1`).
    pub fn expected_baseline(&self) -> Result<f64> {
        let p = self.single_probability()?;
        Ok(self.pulses()? as f64 * p * p)
    }
}

/// Raw counts per delay point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub delays: Vec<f64>,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    pub coincidences: Vec<u64>,
    pub pulses: u64,
    /// Mean coincidences per point at the reference delays.
    pub baseline_coincidences: f64,
    /// Number of reference delays averaged into the baseline; zero means the
    /// baseline is the noiseless expectation.
    pub baseline_points: usize,
}

/// Non-paralyzable dead-time model `r / (1 + r·t)`.
pub fn apply_dead_time(ideal_rate: f64, dead_time: f64) -> Result<f64> {
    if !(ideal_rate >= 0.0) || !(dead_time >= 0.0) {
        return Err(Error::OutOfRange(
            "rate and dead time must be non-negative".into(),
        ));
    }
    if ideal_rate.is_infinite() {
        return if dead_time > 0.0 {
            Ok(1.0 / dead_time)
        } else {
            Ok(f64::INFINITY)
        };
    }
    Ok(ideal_rate / (1.0 + ideal_rate * dead_time))
}

/// Delays whose distance from the dip minimum exceeds `multiple` half-widths.
///
/// The half-width is where the dip first recovers to half its depth, walking
/// outward from the minimum on either side and interpolating linearly; the
/// larger side wins.
pub fn baseline_indices<T: Real>(dip: &DipPattern<T>, multiple: f64) -> Vec<usize> {
    let nc: Vec<f64> = dip.nc_values().iter().map(|v| v.as_f64()).collect();
    let delays: Vec<f64> = dip.delays().iter().map(|v| v.as_f64()).collect();
    let k = dip.argmin();
    let half_level = 1.0 - (1.0 - nc[k]) / 2.0;
    let crossing = |path: &mut dyn Iterator<Item = usize>| -> f64 {
        let mut prev = k;
        for i in path {
            if nc[i] >= half_level {
                let t = (half_level - nc[prev]) / (nc[i] - nc[prev]);
                return (delays[prev] + t * (delays[i] - delays[prev]) - delays[k]).abs();
            }
            prev = i;
        }
        (delays[prev] - delays[k]).abs()
    };
    let half_width = crossing(&mut (k + 1..delays.len())).max(crossing(&mut (0..k).rev()));
    delays
        .iter()
        .enumerate()
        .filter(|(_, t)| (*t - delays[k]).abs() > multiple * half_width)
        .map(|(i, _)| i)
        .collect()
}

/// Draws singles and coincidence counts for every delay of `true_nc`.
pub fn simulate_counts<T: Real>(
    true_nc: &DipPattern<T>,
    budget: &CountingBudget,
    combo: StateCombination<T>,
) -> Result<CountRecord> {
    combo.validate()?;
    let n = budget.pulses()?;
    let ps = budget.single_probability()?;
    let p_base = ps * ps;
    let reference = baseline_indices(true_nc, budget.baseline_multiple);
    if reference.is_empty() {
        return Err(Error::Degenerate(
            "no delay lies far enough from the dip to serve as baseline".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let singles = Binomial::new(n, ps)
        .map_err(|e| Error::InconsistentBudget(format!("singles probability: {e}")))?;
    let mut record = CountRecord {
        delays: true_nc.delays().iter().map(|t| t.as_f64()).collect(),
        counts_a: Vec::with_capacity(true_nc.len()),
        counts_b: Vec::with_capacity(true_nc.len()),
        coincidences: Vec::with_capacity(true_nc.len()),
        pulses: n,
        baseline_coincidences: 0.0,
        baseline_points: 0,
    };
    for nc in true_nc.nc_values() {
        let p = p_base * nc.as_f64();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InconsistentBudget(format!(
                "coincidence probability {p} outside [0, 1]"
            )));
        }
        let coinc = Binomial::new(n, p)
            .map_err(|e| Error::InconsistentBudget(format!("coincidence probability: {e}")))?;
        record.counts_a.push(singles.sample(&mut rng));
        record.counts_b.push(singles.sample(&mut rng));
        record.coincidences.push(coinc.sample(&mut rng));
    }
    if budget.include_baseline_noise {
        let total: u64 = reference.iter().map(|&i| record.coincidences[i]).sum();
        record.baseline_coincidences = total as f64 / reference.len() as f64;
        record.baseline_points = reference.len();
    } else {
        record.baseline_coincidences = n as f64 * p_base;
    }
    Ok(record)
}

/// `N̂_c = coincidences / baseline` with binomial error propagation.
///
/// Zero-count points use one count in the variance so their error stays nonzero.
pub fn estimate_dip<T: Real>(record: &CountRecord) -> Result<DipPattern<T>> {
    let b = record.baseline_coincidences;
    if !(b > 0.0) {
        return Err(Error::Degenerate("baseline has no coincidences".into()));
    }
    let n = record.pulses as f64;
    let var_b = if record.baseline_points > 0 {
        b * (1.0 - b / n) / record.baseline_points as f64
    } else {
        0.0
    };
    let mut nc = Vec::with_capacity(record.coincidences.len());
    let mut se = Vec::with_capacity(record.coincidences.len());
    for &c in &record.coincidences {
        let c = c as f64;
        let ratio = c / b;
        let var_c = c.max(1.0) * (1.0 - c / n);
        nc.push(T::lit(ratio));
        se.push(T::lit(
            (var_c / (b * b) + ratio * ratio * var_b / (b * b)).sqrt(),
        ));
    }
    DipPattern::new(
        record.delays.iter().map(|t| T::lit(*t)).collect(),
        nc,
        Some(se),
    )
}
