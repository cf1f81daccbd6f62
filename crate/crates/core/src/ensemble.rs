//! Monte Carlo ensembles of simulated measurements and their phase statistics.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{estimate_dip, simulate_counts, CountingBudget};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::retrieval::{
    detrend, flip_candidate, mask_weights, run_retrieval, weighted_rms, RetrievalConfig,
};
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::spectrum::{weighted_centroid, PhaseSpectrum};

/// Histogram bin width used unless another is requested, radians.
pub const DEFAULT_BIN_WIDTH: f64 = 0.02;

/// Everything needed to repeat a simulated experiment many times.
#[derive(Debug, Clone)]
pub struct EnsembleSpec<T> {
    pub n_runs: usize,
    pub base_seed: u64,
    /// The `seed` field is replaced per run.
    pub budget: CountingBudget,
    pub scenario: Scenario<T>,
    /// Shared by every run, so runs differ only in their counts.
    pub retrieval: RetrievalConfig,
    /// Angular frequency interval for coverage statistics.
    pub band: (T, T),
    pub bin_width: f64,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn new(scenario: Scenario<T>, band: (T, T)) -> Self {
        Self {
            n_runs: 1000,
            base_seed: 0,
            budget: CountingBudget::default(),
            scenario,
            retrieval: RetrievalConfig::default(),
            band,
            bin_width: DEFAULT_BIN_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 2 {
            return Err(Error::InvalidInput(
                "an ensemble needs at least two runs".into(),
            ));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::InvalidInput("bin width must be positive".into()));
        }
        self.budget.validate()?;
        self.retrieval.validate()?;
        band_indices(&self.scenario.grid, self.band)?;
        Ok(())
    }

    /// Counting seed of run `j`.
    pub fn run_seed(&self, j: usize) -> u64 {
        self.base_seed ^ j as u64
    }
}

/// Sample indices of `grid` inside the closed interval `band`.
///
/// The interval must lie within the grid span; it may still contain no samples.
pub fn band_indices<T: Real>(grid: &FrequencyGrid<T>, band: (T, T)) -> Result<Range<usize>> {
    let (lo, hi) = band;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidInput("band must be a finite interval".into()));
    }
    let first = grid.frequency(0);
    let last = grid.frequency(grid.count() - 1);
    if lo < first || hi > last {
        return Err(Error::OutOfRange(format!(
            "band [{lo}, {hi}] exceeds grid span [{first}, {last}]"
        )));
    }
    let start = grid.position(lo).ceil().to_usize().unwrap_or(0);
    let end = grid.position(hi).floor().to_usize().map_or(0, |e| e + 1);
    Ok(start..end.max(start))
}

/// A run that produced no phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Orientation bookkeeping of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunOrientation {
    /// The engine chose the flipped candidate.
    pub engine_flipped: bool,
    pub ambiguous: bool,
    /// Alignment to the truth kept the flipped version of the engine output.
    pub aligned_flipped: bool,
}

impl RunOrientation {
    /// Whether the engine alone found the orientation closest to the truth.
    pub fn engine_correct(&self) -> bool {
        !self.ambiguous && !self.aligned_flipped
    }
}

/// Per-frequency distribution of reconstructed phases over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution<T> {
    grid: FrequencyGrid<T>,
    truth: PhaseSpectrum<T>,
    weights: Vec<T>,
    runs: Vec<Vec<T>>,
    orientations: Vec<RunOrientation>,
    failures: Vec<RunFailure>,
    bin_width: f64,
    n_bins: usize,
    counts: Vec<u32>,
}

impl<T: Real> PhaseDistribution<T> {
    /// Bins aligned reconstructions; values beyond ±π land in the edge bins.
    pub fn from_runs(
        truth: PhaseSpectrum<T>,
        weights: Vec<T>,
        runs: Vec<Vec<T>>,
        bin_width: f64,
    ) -> Result<Self> {
        let grid = *truth.grid();
        if weights.len() != grid.count() || runs.iter().any(|r| r.len() != grid.count()) {
            return Err(Error::GridMismatch(
                "runs and weights must match the grid".into(),
            ));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::InvalidInput("bin width must be positive".into()));
        }
        let n_bins = (std::f64::consts::TAU / bin_width).ceil() as usize;
        let mut counts = vec![0u32; grid.count() * n_bins];
        for run in &runs {
            for (i, v) in run.iter().enumerate() {
                let b = bin_of(v.as_f64(), bin_width, n_bins);
                counts[i * n_bins + b] += 1;
            }
        }
        let orientations = vec![
            RunOrientation {
                engine_flipped: false,
                ambiguous: false,
                aligned_flipped: false,
            };
            runs.len()
        ];
        Ok(Self {
            grid,
            truth,
            weights,
            runs,
            orientations,
            failures: Vec::new(),
            bin_width,
            n_bins,
            counts,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    /// Detrended ground truth the runs were aligned to.
    pub fn truth(&self) -> &PhaseSpectrum<T> {
        &self.truth
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Aligned, detrended reconstruction of every successful run.
    pub fn runs(&self) -> &[Vec<T>] {
        &self.runs
    }

    pub fn orientations(&self) -> &[RunOrientation] {
        &self.orientations
    }

    pub fn failures(&self) -> &[RunFailure] {
        &self.failures
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        -std::f64::consts::PI + (b as f64 + 0.5) * self.bin_width
    }

    /// Bin counts at frequency sample `i`.
    pub fn histogram(&self, i: usize) -> &[u32] {
        &self.counts[i * self.n_bins..(i + 1) * self.n_bins]
    }

    /// Sample quantile at frequency sample `i`, linear between order statistics.
    pub fn quantile(&self, i: usize, p: f64) -> T {
        let mut v: Vec<T> = self.runs.iter().map(|r| r[i]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
        quantile_sorted(&v, p)
    }

    /// 5 %, 50 % and 95 % curves over the whole grid.
    pub fn quantile_curves(&self) -> Vec<[T; 3]> {
        (0..self.grid.count())
            .map(|i| {
                let mut v: Vec<T> = self.runs.iter().map(|r| r[i]).collect();
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
                [
                    quantile_sorted(&v, 0.05),
                    quantile_sorted(&v, 0.5),
                    quantile_sorted(&v, 0.95),
                ]
            })
            .collect()
    }

    /// Fraction of successful runs whose engine orientation matched the truth.
    pub fn engine_success_rate(&self) -> f64 {
        if self.orientations.is_empty() {
            return 0.0;
        }
        let ok = self
            .orientations
            .iter()
            .filter(|o| o.engine_correct())
            .count();
        ok as f64 / self.orientations.len() as f64
    }
}

fn bin_of(v: f64, width: f64, n_bins: usize) -> usize {
    let b = ((v + std::f64::consts::PI) / width).floor();
    if b.is_nan() || b < 0.0 {
        0
    } else {
        (b as usize).min(n_bins - 1)
    }
}

fn quantile_sorted<T: Real>(v: &[T], p: f64) -> T {
    if v.is_empty() {
        return T::nan();
    }
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = T::lit(h - lo as f64);
    v[lo] + frac * (v[hi] - v[lo])
}

/// Detrends `psd` and returns whichever orientation lies closer to `truth`.
///
/// `truth` must already be detrended with `weights`. The flag reports whether
/// the flipped orientation was kept.
pub fn align_to_truth<T: Real>(
    psd: &PhaseSpectrum<T>,
    truth: &PhaseSpectrum<T>,
    weights: &[T],
    center: T,
) -> Result<(PhaseSpectrum<T>, bool)> {
    let direct = detrend(psd, weights)?;
    let flipped = detrend(&flip_candidate(psd, center)?, weights)?;
    let d = weighted_rms(direct.values(), truth.values(), weights);
    let f = weighted_rms(flipped.values(), truth.values(), weights);
    Ok(if f < d {
        (flipped, true)
    } else {
        (direct, false)
    })
}

enum RunResult<T> {
    Done(Vec<T>, RunOrientation),
    Failed(RunFailure),
}

/// Simulates, retrieves and aligns every run of `spec`.
///
/// Runs execute in parallel; results are gathered in run order so the
/// distribution is identical for identical specs.
pub fn run_ensemble<T: Real>(spec: &EnsembleSpec<T>) -> Result<PhaseDistribution<T>> {
    spec.validate()?;
    let s = &spec.scenario;
    let g_mag = s.g_mag();
    let weights = mask_weights(&g_mag, T::lit(spec.retrieval.intensity_mask_fraction));
    let truth = detrend(&s.truth, &weights)?;
    let center = weighted_centroid(&s.grid, &g_mag);
    let true_dip = s.true_dip()?;

    let results: Vec<RunResult<T>> = (0..spec.n_runs)
        .into_par_iter()
        .map(|j| {
            let seed = spec.run_seed(j);
            let attempt = || -> Result<RunResult<T>> {
                let budget = CountingBudget {
                    seed,
                    ..spec.budget
                };
                let record = simulate_counts(&true_dip, &budget, s.combo)?;
                let dip = estimate_dip::<T>(&record)?;
                let r = run_retrieval(&s.grid, &g_mag, &dip, s.combo, &spec.retrieval)?;
                let (aligned, aligned_flipped) = align_to_truth(&r.psd, &truth, &weights, center)?;
                Ok(RunResult::Done(
                    aligned.into_values(),
                    RunOrientation {
                        engine_flipped: r.flipped,
                        ambiguous: r.ambiguous,
                        aligned_flipped,
                    },
                ))
            };
            attempt().unwrap_or_else(|e| {
                RunResult::Failed(RunFailure {
                    run: j,
                    seed,
                    error: e.to_string(),
                })
            })
        })
        .collect();

    let mut runs = Vec::new();
    let mut orientations = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            RunResult::Done(v, o) => {
                runs.push(v);
                orientations.push(o);
            }
            RunResult::Failed(f) => failures.push(f),
        }
    }
    if runs.is_empty() {
        let first = failures.first().map_or(String::new(), |f| f.error.clone());
        return Err(Error::Degenerate(format!(
            "every ensemble run failed; first error: {first}"
        )));
    }
    let mut dist = PhaseDistribution::from_runs(truth, weights, runs, spec.bin_width)?;
    dist.orientations = orientations;
    dist.failures = failures;
    Ok(dist)
}

/// Fraction of (run, frequency) pairs in `band` within `halfwidth` of `truth`.
pub fn coverage_statistic<T: Real>(
    dist: &PhaseDistribution<T>,
    truth: &PhaseSpectrum<T>,
    halfwidth: T,
    band: (T, T),
) -> Result<f64> {
    if truth.grid() != dist.grid() {
        return Err(Error::GridMismatch(
            "truth and distribution grids differ".into(),
        ));
    }
    if halfwidth.is_nan() || halfwidth < T::zero() {
        return Err(Error::InvalidInput("halfwidth must be non-negative".into()));
    }
    let range = band_indices(dist.grid(), band)?;
    if range.is_empty() || dist.runs.is_empty() {
        return Err(Error::Degenerate("band holds no samples".into()));
    }
    let t = truth.values();
    let mut hits = 0usize;
    for run in &dist.runs {
        hits += range
            .clone()
            .filter(|&i| (run[i] - t[i]).abs() <= halfwidth)
            .count();
    }
    Ok(hits as f64 / (dist.runs.len() * range.len()) as f64)
}

/// Smallest per-frequency fraction of runs within `halfwidth` of `truth` across `band`.
pub fn worst_frequency_coverage<T: Real>(
    dist: &PhaseDistribution<T>,
    truth: &PhaseSpectrum<T>,
    halfwidth: T,
    band: (T, T),
) -> Result<f64> {
    let range = band_indices(dist.grid(), band)?;
    if range.is_empty() || dist.runs.is_empty() {
        return Err(Error::Degenerate("band holds no samples".into()));
    }
    let t = truth.values();
    let n = dist.runs.len() as f64;
    Ok(range
        .map(|i| {
            let hits = dist
                .runs
                .iter()
                .filter(|r| (r[i] - t[i]).abs() <= halfwidth)
                .count();
            hits as f64 / n
        })
        .fold(1.0, f64::min))
}

/// One nonzero histogram cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapCell {
    pub freq_thz: f64,
    pub phase_rad: f64,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    pub freq_thz: f64,
    pub truth: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// Long-form heatmap and quantile curves, ready for plotting.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct HeatmapTable {
    pub cells: Vec<HeatmapCell>,
    pub quantiles: Vec<QuantileRow>,
}

impl HeatmapTable {
    pub const HEATMAP_HEADER: &'static str = "freq_thz,phase_rad,count";
    pub const QUANTILE_HEADER: &'static str = "freq_thz,truth_rad,q05_rad,q50_rad,q95_rad";

    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from(Self::HEATMAP_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{}", c.freq_thz, c.phase_rad, c.count);
        }
        out
    }

    pub fn quantiles_csv(&self) -> String {
        let mut out = String::from(Self::QUANTILE_HEADER);
        out.push('\n');
        for q in &self.quantiles {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                q.freq_thz, q.truth, q.q05, q.q50, q.q95
            );
        }
        out
    }
}

fn to_thz<T: Real>(omega: T) -> f64 {
    omega.as_f64() / (std::f64::consts::TAU * 1e12)
}

/// Exports the histogram and quantiles, restricted to `band` when given.
///
/// Only nonzero cells are listed, ordered by frequency then phase.
pub fn export_heatmap<T: Real>(
    dist: &PhaseDistribution<T>,
    band: Option<(T, T)>,
) -> Result<HeatmapTable> {
    let range = match band {
        Some(b) => band_indices(dist.grid(), b)?,
        None => 0..dist.grid().count(),
    };
    let mut table = HeatmapTable::default();
    for i in range {
        let f = to_thz(dist.grid().frequency(i));
        for (b, &count) in dist.histogram(i).iter().enumerate() {
            if count > 0 {
                table.cells.push(HeatmapCell {
                    freq_thz: f,
                    phase_rad: dist.bin_center(b),
                    count,
                });
            }
        }
        let mut v: Vec<T> = dist.runs.iter().map(|r| r[i]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
        table.quantiles.push(QuantileRow {
            freq_thz: f,
            truth: dist.truth.values()[i].as_f64(),
            q05: quantile_sorted(&v, 0.05).as_f64(),
            q50: quantile_sorted(&v, 0.5).as_f64(),
            q95: quantile_sorted(&v, 0.95).as_f64(),
        });
    }
    Ok(table)
}

/// Headline numbers of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_runs: usize,
    pub successful_runs: usize,
    pub failures: Vec<RunFailure>,
    pub band_thz: [f64; 2],
    pub halfwidth_rad: f64,
    pub coverage: f64,
    pub worst_frequency_coverage: f64,
    pub engine_orientation_success: f64,
    pub ambiguous_runs: usize,
}

pub fn summarize<T: Real>(
    spec: &EnsembleSpec<T>,
    dist: &PhaseDistribution<T>,
    halfwidth: T,
) -> Result<EnsembleSummary> {
    Ok(EnsembleSummary {
        n_runs: spec.n_runs,
        successful_runs: dist.n_runs(),
        failures: dist.failures.clone(),
        band_thz: [to_thz(spec.band.0), to_thz(spec.band.1)],
        halfwidth_rad: halfwidth.as_f64(),
        coverage: coverage_statistic(dist, dist.truth(), halfwidth, spec.band)?,
        worst_frequency_coverage: worst_frequency_coverage(
            dist,
            dist.truth(),
            halfwidth,
            spec.band,
        )?,
        engine_orientation_success: dist.engine_success_rate(),
        ambiguous_runs: dist.orientations.iter().filter(|o| o.ambiguous).count(),
    })
}
