use std::path::{Path, PathBuf};

use hom_phase::detector::{estimate_dip, simulate_counts};
use hom_phase::ensemble::{export_heatmap, run_ensemble, summarize, EnsembleSpec};
use hom_phase::forward::{synthesize_dip, StateCombination};
use hom_phase::grid::FrequencyGrid;
use hom_phase::presets::PhasePreset;
use hom_phase::retrieval::{run_retrieval, RestartSummary};
use hom_phase::scenario::{delay_schedule, ReferenceSetup, Scenario};
use hom_phase::spectrum::{equivalent_magnitude, PhaseSpectrum};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{self, thz_to_omega};
use crate::settings::Settings;

/// Parses `single-single`, `single-coherent:A` or `coherent-coherent:A1,A2`.
pub fn parse_combo(s: &str) -> CliResult<StateCombination<f64>> {
    let bad = || {
        CliError::Input(format!(
            "combo `{s}`: expected single-single, single-coherent:A or coherent-coherent:A1,A2"
        ))
    };
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let amps: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|a| a.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    let combo = match (kind.trim(), amps.as_slice()) {
        ("single-single", []) => StateCombination::SingleSingle,
        ("single-coherent", [a]) => StateCombination::single_coherent(*a)?,
        ("coherent-coherent", [a, b]) => StateCombination::coherent_coherent(*a, *b)?,
        _ => return Err(bad()),
    };
    Ok(combo)
}

/// Parameters shared by the phase presets, in laboratory units.
#[derive(Debug, Clone)]
pub struct PresetParams {
    pub name: String,
    /// Reference frequency, THz; the grid centre when absent.
    pub center_thz: Option<f64>,
    pub amplitude: f64,
    pub half_width_ghz: f64,
    pub skew: f64,
    pub smoothing_ghz: f64,
    pub slope_ps: f64,
    pub curvature_ps2: f64,
    pub table: Option<PathBuf>,
}

impl PresetParams {
    /// Reads any table file, so input errors surface before computation.
    pub fn resolve(&self, grid: &FrequencyGrid<f64>) -> CliResult<PhasePreset<f64>> {
        let center = self
            .center_thz
            .map_or(grid.center_frequency(), thz_to_omega);
        let ghz = |x: f64| thz_to_omega(x * 1e-3);
        Ok(match self.name.as_str() {
            "flat" => PhasePreset::Flat,
            "linear" => PhasePreset::Linear { center, slope: self.slope_ps * 1e-12 },
            "quadratic" => PhasePreset::Quadratic { center, curvature: self.curvature_ps2 * 1e-24 },
            "inverted-n" => PhasePreset::InvertedN {
                center,
                amplitude: self.amplitude,
                half_width: ghz(self.half_width_ghz),
                skew: self.skew,
                smoothing: ghz(self.smoothing_ghz),
            },
            "custom-table" => {
                let path = self.table.as_deref().ok_or_else(|| {
                    CliError::Input("preset custom-table needs --table".into())
                })?;
                let rows = io::read_psd_rows(path)?;
                PhasePreset::CustomTable {
                    omegas: rows.iter().map(|r| thz_to_omega(r.freq_thz)).collect(),
                    phases: rows.iter().map(|r| r.phase_rad).collect(),
                }
            }
            other => {
                return Err(CliError::Input(format!(
                    "unknown preset `{other}`; known presets: flat, linear, quadratic, inverted-n, custom-table"
                )))
            }
        })
    }
}

/// Delays in seconds from an explicit list or a centred schedule, both in ps.
pub fn delays_seconds(
    list: Option<&[f64]>,
    count: usize,
    step_ps: f64,
    extra_ps: &[f64],
) -> CliResult<Vec<f64>> {
    let delays = match list {
        Some(l) => l.iter().map(|t| t * 1e-12).collect::<Vec<_>>(),
        None => {
            if !(step_ps > 0.0) || count == 0 {
                return Err(CliError::Input(
                    "delay schedule needs a positive step and count".into(),
                ));
            }
            let extra: Vec<f64> = extra_ps.iter().map(|t| t * 1e-12).collect();
            delay_schedule(count, step_ps * 1e-12, &extra)
        }
    };
    if delays.is_empty() || delays.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Input(
            "delays must be finite and non-empty".into(),
        ));
    }
    Ok(delays)
}

pub struct SimulateRequest<'a> {
    pub spectrum_a: &'a Path,
    pub spectrum_b: Option<&'a Path>,
    pub psd: Option<&'a Path>,
    pub preset: &'a PresetParams,
    pub combo: StateCombination<f64>,
    pub delays: Vec<f64>,
    pub counting: Option<(Settings, u64)>,
    pub out: &'a Path,
}

pub fn simulate(req: SimulateRequest) -> CliResult<Vec<PathBuf>> {
    let (grid, i1, i2) = io::read_spectra(req.spectrum_a, req.spectrum_b)?;
    let truth = match req.psd {
        Some(p) => io::read_psd(p, &grid)?,
        None => req.preset.resolve(&grid)?.render(&grid)?,
    };
    let budget = match &req.counting {
        Some((settings, seed)) => Some(settings.budget(*seed)?),
        None => None,
    };
    let dip = synthesize_dip(&i1, &i2, &truth, req.combo, &req.delays)?;
    let mut files = vec![("dip.csv", io::dip_csv(&dip)?)];
    if let Some(budget) = budget {
        let record = simulate_counts(&dip, &budget, req.combo)?;
        let measured = estimate_dip::<f64>(&record)?;
        files.push(("counts.csv", io::counts_csv(&measured, &record)?));
    }
    io::write_outputs(req.out, &files)
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    flipped: bool,
    ambiguous: bool,
    fitted_amplitude: f64,
    winning_restart: usize,
    residual: f64,
    alignment_shift_ps: f64,
    cluster_count: usize,
    cluster_size: usize,
    restarts: Vec<RestartSummary<f64>>,
}

#[derive(Serialize)]
struct ResidualRow {
    iteration: usize,
    residual: f64,
}

/// Delay points the retrieval needs at the least.
pub const MIN_DIP_POINTS: usize = 16;

pub fn retrieve(
    spectrum_a: &Path,
    spectrum_b: Option<&Path>,
    dip_path: &Path,
    combo: StateCombination<f64>,
    settings: &Settings,
    seed: u64,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let (grid, i1, i2) = io::read_spectra(spectrum_a, spectrum_b)?;
    let dip = io::read_dip(dip_path)?;
    if dip.len() < MIN_DIP_POINTS {
        return Err(CliError::file(
            dip_path,
            format!(
                "{} delay points; retrieval needs at least {MIN_DIP_POINTS}",
                dip.len()
            ),
        ));
    }
    let cfg = settings.retrieval(seed)?;
    let g_mag = equivalent_magnitude(&i1, &i2)?;
    let r = run_retrieval(&grid, &g_mag, &dip, combo, &cfg)?;
    let diagnostics = Diagnostics {
        flipped: r.flipped,
        ambiguous: r.ambiguous,
        fitted_amplitude: r.fitted_amplitude,
        winning_restart: r.restart_index,
        residual: r.residual,
        alignment_shift_ps: r.alignment_shift * 1e12,
        cluster_count: r.cluster_count,
        cluster_size: r.cluster_size,
        restarts: r.restarts.clone(),
    };
    let history = r
        .residual_history
        .iter()
        .enumerate()
        .map(|(iteration, residual)| ResidualRow {
            iteration,
            residual: *residual,
        });
    let files = [
        ("psd.csv", io::psd_csv(&r.psd)?),
        ("residuals.csv", io::to_csv(history)?),
        ("diagnostics.json", json_bytes(&diagnostics)?),
    ];
    io::write_outputs(out, &files)
}

fn json_bytes<S: Serialize>(value: &S) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Input(format!("json encoding: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

pub fn gen_phase(
    grid: &FrequencyGrid<f64>,
    preset: &PresetParams,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let psd = preset.resolve(grid)?.render(grid)?;
    let name = out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Input(format!("{}: not a file path", out.display())))?;
    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    io::write_outputs(dir, &[(name, io::psd_csv(&psd)?)])
}

/// The ensemble scenario: files named in the settings, the reference setup otherwise.
fn ensemble_scenario(settings: &Settings) -> CliResult<Scenario<f64>> {
    let e = settings.ensemble()?;
    let reference = ReferenceSetup::default();
    let combo = parse_combo(&e.combo)?;
    let (grid, i1, i2) = match &e.spectrum_a {
        Some(a) => io::read_spectra(a, e.spectrum_b.as_deref())?,
        None => {
            if e.spectrum_b.is_some() {
                return Err(CliError::Input("spectrum_b needs spectrum_a".into()));
            }
            let s = reference.build::<f64>()?;
            (s.grid, s.i1, s.i2)
        }
    };
    let truth: PhaseSpectrum<f64> = match &e.psd {
        Some(p) => io::read_psd(p, &grid)?,
        None => reference.preset().render(&grid)?,
    };
    let delays = match &e.delays_ps {
        Some(d) => delays_seconds(Some(d), 0, 0.0, &[])?,
        None => reference.delays(),
    };
    Ok(Scenario::new(i1, i2, truth, combo, delays)?)
}

pub fn ensemble(settings: &Settings, seed: u64, out: &Path) -> CliResult<Vec<PathBuf>> {
    let e = settings.ensemble()?;
    let scenario = ensemble_scenario(settings)?;
    let band = (thz_to_omega(e.band_thz[0]), thz_to_omega(e.band_thz[1]));
    let mut spec = EnsembleSpec::new(scenario, band);
    spec.n_runs = e.n_runs;
    spec.base_seed = seed;
    spec.budget = settings.budget(seed)?;
    spec.retrieval = settings.retrieval(seed)?;
    spec.bin_width = e.bin_width;
    spec.validate()?;
    let dist = run_ensemble(&spec)?;
    let summary = summarize(&spec, &dist, e.halfwidth_rad)?;
    let table = export_heatmap(&dist, Some(band))?;
    let files = [
        ("heatmap.csv", table.heatmap_csv().into_bytes()),
        ("quantiles.csv", table.quantiles_csv().into_bytes()),
        ("summary.json", json_bytes(&summary)?),
    ];
    io::write_outputs(out, &files)
}

/// Grid for `gen-phase`: from a spectrum file, or centre, spacing and count.
pub fn explicit_grid(
    center_thz: f64,
    spacing_ghz: f64,
    count: usize,
) -> CliResult<FrequencyGrid<f64>> {
    Ok(FrequencyGrid::new(
        thz_to_omega(center_thz),
        thz_to_omega(spacing_ghz * 1e-3),
        count,
    )?)
}

pub fn grid_from_file(path: &Path) -> CliResult<FrequencyGrid<f64>> {
    Ok(io::read_spectrum(path)?.0)
}
