//! Flat JSON configuration shared by every subcommand.
//!
//! Keys mirror the retrieval, counting and ensemble settings of the library.
//! File values are applied over the defaults and `--set key=value` flags over
//! the file. The seed never comes from the file.

use std::path::{Path, PathBuf};

use hom_phase::detector::CountingBudget;
use hom_phase::retrieval::RetrievalConfig;
use hom_phase::scenario::ReferenceSetup;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Ensemble and scenario keys. Paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub n_runs: usize,
    pub band_thz: [f64; 2],
    pub bin_width: f64,
    pub halfwidth_rad: f64,
    pub spectrum_a: Option<PathBuf>,
    pub spectrum_b: Option<PathBuf>,
    pub psd: Option<PathBuf>,
    pub combo: String,
    pub delays_ps: Option<Vec<f64>>,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            n_runs: 1000,
            band_thz: [193.13, 193.25],
            bin_width: hom_phase::ensemble::DEFAULT_BIN_WIDTH,
            halfwidth_rad: 0.1,
            spectrum_a: None,
            spectrum_b: None,
            psd: None,
            combo: "coherent-coherent:1,1".into(),
            delays_ps: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    values: Map<String, Value>,
    base_dir: PathBuf,
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("settings structs serialize to objects"),
    }
}

fn defaults() -> Map<String, Value> {
    let mut all = Map::new();
    all.extend(object(
        serde_json::to_value(RetrievalConfig::default()).expect("serializable"),
    ));
    all.extend(object(
        serde_json::to_value(ReferenceSetup::default().budget()).expect("serializable"),
    ));
    all.extend(object(
        serde_json::to_value(EnsembleSettings::default()).expect("serializable"),
    ));
    all.remove("seed");
    all
}

fn same_kind(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Null, _)
            | (Value::Bool(_), Value::Bool(_))
            | (Value::Number(_), Value::Number(_))
            | (Value::String(_), Value::String(_))
            | (Value::Array(_), Value::Array(_))
    )
}

impl Settings {
    /// Defaults, then the file at `path`, then `overrides` of the form `key=value`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut values = defaults();
        let mut base_dir = PathBuf::from(".");
        let mut apply = |key: &str, v: Value, origin: &str| -> CliResult<()> {
            if key == "seed" {
                return Err(CliError::Input(format!(
                    "{origin}: the seed is given with --seed, not as a setting"
                )));
            }
            let slot = values
                .get_mut(key)
                .ok_or_else(|| CliError::Input(format!("{origin}: unknown setting `{key}`")))?;
            if !same_kind(slot, &v) && !v.is_null() {
                return Err(CliError::Input(format!(
                    "{origin}: setting `{key}` expects a value like {slot}, got {v}"
                )));
            }
            *slot = v;
            Ok(())
        };
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::file(p, e))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::file(p, format!("line {}: {e}", e.line())))?;
            let Value::Object(map) = v else {
                return Err(CliError::file(p, "expected a JSON object of settings"));
            };
            for (k, v) in map {
                apply(&k, v, &p.display().to_string())?;
            }
            if let Some(dir) = p.parent() {
                base_dir = dir.to_path_buf();
            }
        }
        for o in overrides {
            let (k, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("--set {o}: expected key=value")))?;
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            apply(k.trim(), v, &format!("--set {o}"))?;
        }
        Ok(Self { values, base_dir })
    }

    fn extract<T: serde::de::DeserializeOwned>(&self) -> CliResult<T> {
        serde_json::from_value(Value::Object(self.values.clone()))
            .map_err(|e| CliError::Input(format!("settings: {e}")))
    }

    pub fn retrieval(&self, seed: u64) -> CliResult<RetrievalConfig> {
        let cfg = RetrievalConfig {
            seed,
            ..self.extract()?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn budget(&self, seed: u64) -> CliResult<CountingBudget> {
        let b = CountingBudget {
            seed,
            ..self.extract()?
        };
        b.validate()?;
        Ok(b)
    }

    pub fn ensemble(&self) -> CliResult<EnsembleSettings> {
        let mut e: EnsembleSettings = self.extract()?;
        for p in [&mut e.spectrum_a, &mut e.spectrum_b, &mut e.psd]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = self.base_dir.join(&*p);
            }
        }
        Ok(e)
    }
}
