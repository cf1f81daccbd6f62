//! CSV formats and atomic output.
//!
//! Frequencies are stored in THz of ordinary frequency and delays in ps; the
//! library works in rad/s and s.

use std::fs;
use std::path::{Path, PathBuf};

use hom_phase::forward::DipPattern;
use hom_phase::grid::FrequencyGrid;
use hom_phase::spectrum::{IntensitySpectrum, PhaseSpectrum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

const RAD_PER_S_PER_THZ: f64 = std::f64::consts::TAU * 1e12;

pub fn thz_to_omega(thz: f64) -> f64 {
    thz * RAD_PER_S_PER_THZ
}

pub fn omega_to_thz(omega: f64) -> f64 {
    omega / RAD_PER_S_PER_THZ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub freq_thz: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdRow {
    pub freq_thz: f64,
    pub phase_rad: f64,
}

/// A dip sample as written; the count columns appear only in simulated measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipRow {
    pub delay_ps: f64,
    pub nc: f64,
    pub stderr: Option<f64>,
    #[serde(default)]
    pub counts_a: Option<u64>,
    #[serde(default)]
    pub counts_b: Option<u64>,
    #[serde(default)]
    pub coincidences: Option<u64>,
}

#[derive(Serialize)]
struct DipRowOut {
    delay_ps: f64,
    nc: f64,
    stderr: Option<f64>,
}

#[derive(Serialize)]
struct CountRowOut {
    delay_ps: f64,
    nc: f64,
    stderr: Option<f64>,
    counts_a: u64,
    counts_b: u64,
    coincidences: u64,
}

pub const SPECTRUM_HEADER: &[&str] = &["freq_thz", "intensity"];
pub const PSD_HEADER: &[&str] = &["freq_thz", "phase_rad"];
pub const DIP_HEADER: &[&str] = &["delay_ps", "nc", "stderr"];
pub const COUNT_COLUMNS: &[&str] = &["counts_a", "counts_b", "coincidences"];

/// Reads `path` as CSV whose header is `header`, optionally followed by `tail`.
///
/// Errors carry the file name and, for bad rows, the line number.
pub fn read_rows<R: DeserializeOwned>(
    path: &Path,
    header: &[&str],
    tail: &[&str],
) -> CliResult<Vec<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::file(path, describe_csv(&e)))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::file(path, describe_csv(&e)))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_tail: Vec<&str> = header.iter().chain(tail).copied().collect();
    if names != header && (tail.is_empty() || names != with_tail) {
        let expected = if tail.is_empty() {
            header.join(",")
        } else {
            format!(
                "{} (optionally followed by {})",
                header.join(","),
                tail.join(",")
            )
        };
        return Err(CliError::file(
            path,
            format!(
                "line 1: expected header {expected}, found {}",
                names.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::file(path, describe_csv(&e)))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: R = rec
            .deserialize(Some(&headers))
            .map_err(|e| CliError::file(path, format!("line {line}: {}", csv_kind(&e))))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::file(path, "no data rows"));
    }
    Ok(rows)
}

fn describe_csv(e: &csv::Error) -> String {
    match e.position() {
        Some(p) => format!("line {}: {}", p.line(), csv_kind(e)),
        None => csv_kind(e),
    }
}

fn csv_kind(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Io(io) => io.to_string(),
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    }
}

fn check_finite(path: &Path, values: impl Iterator<Item = f64>, what: &str) -> CliResult<()> {
    for (k, v) in values.enumerate() {
        if !v.is_finite() {
            // data rows start on line 2
            return Err(CliError::file(
                path,
                format!("line {}: {what} is not finite", k + 2),
            ));
        }
    }
    Ok(())
}

/// The uniform power-of-two grid sampled by `freqs_thz`.
pub fn grid_from_samples(path: &Path, freqs_thz: &[f64]) -> CliResult<FrequencyGrid<f64>> {
    let n = freqs_thz.len();
    if n < 8 || !n.is_power_of_two() {
        return Err(CliError::file(
            path,
            format!("{n} samples; the frequency grid needs a power of two, at least 8"),
        ));
    }
    let step = (freqs_thz[n - 1] - freqs_thz[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(CliError::file(path, "frequencies must increase"));
    }
    for (i, f) in freqs_thz.iter().enumerate() {
        if (f - (freqs_thz[0] + i as f64 * step)).abs() > 1e-6 * step {
            return Err(CliError::file(
                path,
                format!(
                    "line {}: frequency {f} THz breaks the uniform spacing",
                    i + 2
                ),
            ));
        }
    }
    let center = freqs_thz[0] + (n / 2) as f64 * step;
    FrequencyGrid::new(thz_to_omega(center), thz_to_omega(step), n)
        .map_err(|e| CliError::file(path, e))
}

pub fn grid_thz(grid: &FrequencyGrid<f64>) -> Vec<f64> {
    grid.frequencies().into_iter().map(omega_to_thz).collect()
}

fn span_text(grid: &FrequencyGrid<f64>) -> String {
    let f = grid_thz(grid);
    format!(
        "{:.6}-{:.6} THz ({} samples)",
        f[0],
        f[f.len() - 1],
        f.len()
    )
}

fn same_grid(a: &FrequencyGrid<f64>, b: &FrequencyGrid<f64>) -> bool {
    a.count() == b.count()
        && (a.spacing() - b.spacing()).abs() <= 1e-9 * a.spacing()
        && (a.center_frequency() - b.center_frequency()).abs() <= 1e-6 * a.spacing()
}

pub fn read_spectrum(path: &Path) -> CliResult<(FrequencyGrid<f64>, Vec<f64>)> {
    let rows: Vec<SpectrumRow> = read_rows(path, SPECTRUM_HEADER, &[])?;
    check_finite(path, rows.iter().map(|r| r.freq_thz), "freq_thz")?;
    check_finite(path, rows.iter().map(|r| r.intensity), "intensity")?;
    let freqs: Vec<f64> = rows.iter().map(|r| r.freq_thz).collect();
    let grid = grid_from_samples(path, &freqs)?;
    Ok((grid, rows.iter().map(|r| r.intensity).collect()))
}

/// Both spectra on their shared grid; `b` defaults to `a`.
pub fn read_spectra(
    a: &Path,
    b: Option<&Path>,
) -> CliResult<(
    FrequencyGrid<f64>,
    IntensitySpectrum<f64>,
    IntensitySpectrum<f64>,
)> {
    let (grid, ia) = read_spectrum(a)?;
    let ib = match b {
        Some(b) => {
            let (gb, ib) = read_spectrum(b)?;
            if !same_grid(&grid, &gb) {
                return Err(CliError::Input(format!(
                    "spectrum grids differ: {} spans {}, {} spans {}",
                    a.display(),
                    span_text(&grid),
                    b.display(),
                    span_text(&gb)
                )));
            }
            ib
        }
        None => ia.clone(),
    };
    let ia = IntensitySpectrum::new(grid, ia).map_err(|e| CliError::file(a, e))?;
    let ib = IntensitySpectrum::new(grid, ib).map_err(|e| CliError::file(b.unwrap_or(a), e))?;
    Ok((grid, ia, ib))
}

pub fn read_psd_rows(path: &Path) -> CliResult<Vec<PsdRow>> {
    let rows: Vec<PsdRow> = read_rows(path, PSD_HEADER, &[])?;
    check_finite(path, rows.iter().map(|r| r.freq_thz), "freq_thz")?;
    check_finite(path, rows.iter().map(|r| r.phase_rad), "phase_rad")?;
    if rows.windows(2).any(|w| w[1].freq_thz <= w[0].freq_thz) {
        return Err(CliError::file(path, "frequencies must increase"));
    }
    Ok(rows)
}

/// A phase file on `grid`: taken as is when it samples the same grid, otherwise
/// interpolated linearly with the end values held.
pub fn read_psd(path: &Path, grid: &FrequencyGrid<f64>) -> CliResult<PhaseSpectrum<f64>> {
    let rows = read_psd_rows(path)?;
    let freqs: Vec<f64> = rows.iter().map(|r| r.freq_thz).collect();
    let phases: Vec<f64> = rows.iter().map(|r| r.phase_rad).collect();
    if let Ok(g) = grid_from_samples(path, &freqs) {
        if same_grid(&g, grid) {
            return PhaseSpectrum::new(*grid, phases).map_err(|e| CliError::file(path, e));
        }
    }
    let omegas: Vec<f64> = freqs.into_iter().map(thz_to_omega).collect();
    PhaseSpectrum::resample(*grid, &omegas, &phases).map_err(|e| CliError::file(path, e))
}

pub fn read_dip_rows(path: &Path) -> CliResult<Vec<DipRow>> {
    let rows: Vec<DipRow> = read_rows(path, DIP_HEADER, COUNT_COLUMNS)?;
    check_finite(path, rows.iter().map(|r| r.delay_ps), "delay_ps")?;
    check_finite(path, rows.iter().map(|r| r.nc), "nc")?;
    check_finite(path, rows.iter().filter_map(|r| r.stderr), "stderr")?;
    Ok(rows)
}

/// Standard errors are used only when every row has one.
pub fn read_dip(path: &Path) -> CliResult<DipPattern<f64>> {
    let rows = read_dip_rows(path)?;
    let delays = rows.iter().map(|r| r.delay_ps * 1e-12).collect();
    let nc = rows.iter().map(|r| r.nc).collect();
    let se: Option<Vec<f64>> = rows.iter().map(|r| r.stderr).collect();
    DipPattern::new(delays, nc, se).map_err(|e| CliError::file(path, e))
}

pub fn psd_csv(psd: &PhaseSpectrum<f64>) -> CliResult<Vec<u8>> {
    let rows = grid_thz(psd.grid())
        .into_iter()
        .zip(psd.values())
        .map(|(freq_thz, phase_rad)| PsdRow {
            freq_thz,
            phase_rad: *phase_rad,
        });
    to_csv(rows)
}

pub fn dip_csv(dip: &DipPattern<f64>) -> CliResult<Vec<u8>> {
    let se = dip.std_errors();
    let rows = dip
        .delays()
        .iter()
        .zip(dip.nc_values())
        .enumerate()
        .map(|(i, (t, nc))| DipRowOut {
            delay_ps: t * 1e12,
            nc: *nc,
            stderr: se.map(|s| s[i]),
        });
    to_csv(rows)
}

pub fn counts_csv(
    dip: &DipPattern<f64>,
    record: &hom_phase::detector::CountRecord,
) -> CliResult<Vec<u8>> {
    let se = dip.std_errors();
    let rows = (0..dip.len()).map(|i| CountRowOut {
        delay_ps: dip.delays()[i] * 1e12,
        nc: dip.nc_values()[i],
        stderr: se.map(|s| s[i]),
        counts_a: record.counts_a[i],
        counts_b: record.counts_b[i],
        coincidences: record.coincidences[i],
    });
    to_csv(rows)
}

pub fn to_csv<S: Serialize>(rows: impl IntoIterator<Item = S>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Input(format!("csv encoding: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Input(format!("csv encoding: {e}")))
}

/// Writes every file through a temporary sibling and a rename, so a failed
/// run leaves earlier outputs untouched. Nothing is written unless the output
/// directory can be created.
pub fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(CliError::file(&target, e));
        }
        staged.push((tmp, target));
    }
    let mut written = Vec::new();
    for (tmp, target) in staged {
        fs::rename(&tmp, &target).map_err(|e| CliError::file(&target, e))?;
        written.push(target);
    }
    Ok(written)
}
