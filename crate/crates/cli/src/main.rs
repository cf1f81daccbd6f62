//! `hom-phase`: simulate Hong-Ou-Mandel dips, retrieve the spectral phase
//! difference behind them, and run Monte Carlo ensembles.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 when the numerics fail.

mod commands;
mod error;
mod io;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{PresetParams, SimulateRequest};
use crate::error::{CliError, CliResult};
use crate::settings::Settings;

#[derive(Parser)]
#[command(
    name = "hom-phase",
    version,
    about = "HOM dip simulation and phase retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the dip of two spectra and a phase difference, optionally with counting noise.
    Simulate(SimulateArgs),
    /// Recover the phase difference from spectra and a measured dip.
    Retrieve(RetrieveArgs),
    /// Repeat simulate and retrieve many times and summarize the spread.
    Ensemble(EnsembleArgs),
    /// Write a preset phase function on a frequency grid.
    GenPhase(GenPhaseArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON file of settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct PresetArgs {
    /// flat, linear, quadratic, inverted-n or custom-table.
    #[arg(long, default_value = "inverted-n")]
    preset: String,
    /// Reference frequency of the preset, THz. Defaults to the grid centre.
    #[arg(long)]
    preset_center_thz: Option<f64>,
    /// Inverted-n peak phase, rad.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 150.0)]
    half_width_ghz: f64,
    /// Inverted-n shift of the inner knots, in half-widths.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    skew: f64,
    #[arg(long, default_value_t = 10.0)]
    smoothing_ghz: f64,
    /// Linear preset slope, ps.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    slope_ps: f64,
    /// Quadratic preset curvature, ps².
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    curvature_ps2: f64,
    /// Phase table for custom-table, `freq_thz,phase_rad`.
    #[arg(long)]
    table: Option<PathBuf>,
}

impl PresetArgs {
    fn params(&self) -> PresetParams {
        PresetParams {
            name: self.preset.clone(),
            center_thz: self.preset_center_thz,
            amplitude: self.amplitude,
            half_width_ghz: self.half_width_ghz,
            skew: self.skew,
            smoothing_ghz: self.smoothing_ghz,
            slope_ps: self.slope_ps,
            curvature_ps2: self.curvature_ps2,
            table: self.table.clone(),
        }
    }
}

#[derive(Args)]
struct SpectraArgs {
    /// Intensity spectrum of photon A, `freq_thz,intensity` on a uniform power-of-two grid.
    #[arg(long)]
    spectrum_a: PathBuf,
    /// Intensity spectrum of photon B; defaults to A's.
    #[arg(long)]
    spectrum_b: Option<PathBuf>,
    /// single-single, single-coherent:A or coherent-coherent:A1,A2.
    #[arg(long, default_value = "coherent-coherent:1,1")]
    combo: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    spectra: SpectraArgs,
    /// Phase difference file, `freq_thz,phase_rad`; otherwise the preset is used.
    #[arg(long, conflicts_with = "preset")]
    psd: Option<PathBuf>,
    #[command(flatten)]
    preset: PresetArgs,
    /// Explicit delays, ps, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    delays: Option<Vec<f64>>,
    /// Points of the uniform delay schedule centred on zero.
    #[arg(long, default_value_t = 35)]
    delay_count: usize,
    #[arg(long, default_value_t = 1.25)]
    delay_step_ps: f64,
    /// Extra delays appended to the schedule, ps.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-65,-55,-45,45,55,65"
    )]
    extra_delays: Vec<f64>,
    /// Also simulate photon counting and write the estimated dip.
    #[arg(long)]
    counts: bool,
    #[command(flatten)]
    config: ConfigArgs,
    /// Counting seed; required with --counts.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    spectra: SpectraArgs,
    /// Dip file, `delay_ps,nc,stderr` with optional count columns.
    #[arg(long)]
    dip: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Seed of the random starting phases.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// JSON file of settings; the reference experiment fills anything absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed; run `j` counts with `seed ^ j`.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenPhaseArgs {
    #[command(flatten)]
    preset: PresetArgs,
    /// Take the grid from this spectrum file.
    #[arg(long, conflicts_with_all = ["center_thz", "spacing_ghz", "count"])]
    grid_from: Option<PathBuf>,
    #[arg(long, default_value_t = 193.19)]
    center_thz: f64,
    #[arg(long, default_value_t = 0.390625)]
    spacing_ghz: f64,
    #[arg(long, default_value_t = 2048)]
    count: usize,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate(a) => {
            let combo = commands::parse_combo(&a.spectra.combo)?;
            let delays = commands::delays_seconds(
                a.delays.as_deref(),
                a.delay_count,
                a.delay_step_ps,
                &a.extra_delays,
            )?;
            let counting = if a.counts {
                let seed = a
                    .seed
                    .ok_or_else(|| CliError::Input("--counts needs --seed".into()))?;
                Some((
                    Settings::load(a.config.config.as_deref(), &a.config.overrides)?,
                    seed,
                ))
            } else {
                None
            };
            let preset = a.preset.params();
            commands::simulate(SimulateRequest {
                spectrum_a: &a.spectra.spectrum_a,
                spectrum_b: a.spectra.spectrum_b.as_deref(),
                psd: a.psd.as_deref(),
                preset: &preset,
                combo,
                delays,
                counting,
                out: &a.out,
            })
        }
        Command::Retrieve(a) => {
            let combo = commands::parse_combo(&a.spectra.combo)?;
            let settings = Settings::load(a.config.config.as_deref(), &a.config.overrides)?;
            commands::retrieve(
                &a.spectra.spectrum_a,
                a.spectra.spectrum_b.as_deref(),
                &a.dip,
                combo,
                &settings,
                a.seed,
                &a.out,
            )
        }
        Command::Ensemble(a) => {
            let settings = Settings::load(a.spec.as_deref(), &a.overrides)?;
            commands::ensemble(&settings, a.seed, &a.out)
        }
        Command::GenPhase(a) => {
            let grid = match &a.grid_from {
                Some(p) => commands::grid_from_file(p)?,
                None => commands::explicit_grid(a.center_thz, a.spacing_ghz, a.count)?,
            };
            commands::gen_phase(&grid, &a.preset.params(), &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
