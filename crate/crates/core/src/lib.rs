//! Spectral phase retrieval from two-photon interference dips.
//!
//! Everything is generic over the scalar type; the aliases below fix it to `f64` or `f32`.

pub mod detector;
pub mod ensemble;
pub mod error;
pub mod forward;
pub mod grid;
pub mod interp;
pub mod presets;
pub mod retrieval;
pub mod scalar;
pub mod scenario;
pub mod spectrum;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FrequencyGrid = grid::FrequencyGrid<f64>;
pub type TimeGrid = grid::TimeGrid<f64>;
pub type IntensitySpectrum = spectrum::IntensitySpectrum<f64>;
pub type PhaseSpectrum = spectrum::PhaseSpectrum<f64>;
pub type StateCombination = forward::StateCombination<f64>;
pub type DipPattern = forward::DipPattern<f64>;
pub type PhasePreset = presets::PhasePreset<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type RetrievalResult = retrieval::RetrievalResult<f64>;

pub type FrequencyGridF32 = grid::FrequencyGrid<f32>;
pub type IntensitySpectrumF32 = spectrum::IntensitySpectrum<f32>;
pub type PhaseSpectrumF32 = spectrum::PhaseSpectrum<f32>;
pub type DipPatternF32 = forward::DipPattern<f32>;
