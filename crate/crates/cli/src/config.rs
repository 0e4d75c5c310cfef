//! TOML experiment configs.

use std::fmt;
use std::path::PathBuf;

use glt_core::models::ModelSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::catalog;

/// A schema violation, anchored to a line of the config when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }

    pub fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn from_toml(text: &str, e: toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| line_of(text, s.start));
    ConfigError::at(line, e.message().trim().to_string())
}

/// Line of the first `key = ...` assignment at or below `[params]`.
fn param_line(text: &str, key: &str) -> Option<usize> {
    let start = text.lines().position(|l| l.trim() == "[params]").unwrap_or(0);
    text.lines().enumerate().skip(start).find_map(|(i, l)| {
        let l = l.trim_start();
        let rest = l.strip_prefix(key)?;
        rest.trim_start().starts_with('=').then_some(i + 1)
    })
}

fn default_times() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrParams {
    pub times: Vec<f64>,
    pub distances: Vec<usize>,
    pub mu_grid: Vec<f64>,
    pub k_max: Option<usize>,
    pub site: usize,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            times: default_times(),
            distances: vec![2, 3, 4, 5],
            mu_grid: glt_core::lieb_robinson::MU_GRID.to_vec(),
            k_max: None,
            site: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrParams {
    pub operators: Vec<Axis>,
    pub alpha_fractions: Vec<f64>,
    pub max_distance: Option<usize>,
    pub fit_max_distance: Option<usize>,
    pub site: usize,
}

impl Default for CorrParams {
    fn default() -> Self {
        CorrParams { operators: vec![Axis::Z], alpha_fractions: vec![0.25, 0.125, 0.0625], max_distance: None, fit_max_distance: None, site: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsmParams {
    pub sizes: Option<Vec<usize>>,
    pub sector: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    pub grid_points: usize,
    pub levels: usize,
    pub sector: Option<i64>,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { grid_points: 64, levels: 4, sector: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BerryParams {
    pub n: usize,
    pub sector: Option<i64>,
}

impl Default for BerryParams {
    fn default() -> Self {
        BerryParams { n: 20, sector: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HallParams {
    pub n: usize,
    pub radius: Option<f64>,
    pub steps: usize,
    pub delta_fraction: f64,
    pub tiling_steps: Option<usize>,
    pub sector: Option<i64>,
}

impl Default for HallParams {
    fn default() -> Self {
        HallParams { n: 16, radius: None, steps: 200, delta_fraction: 0.25, tiling_steps: None, sector: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    pub target: ModelSpec,
    #[serde(default = "default_steps")]
    pub steps: Vec<usize>,
    #[serde(default = "half")]
    pub delta_fraction: f64,
    #[serde(default)]
    pub sector: Option<i64>,
}

fn default_steps() -> Vec<usize> {
    vec![16, 32, 64]
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    LrBound(LrParams),
    CorrDecay(CorrParams),
    Lsm(LsmParams),
    SpectralFlow(FlowParams),
    Berry(BerryParams),
    Hall(HallParams),
    Transport(TransportParams),
}

/// A validated config.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: &'static str,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    pub params: Params,
    /// Hex SHA-256 of the config file bytes.
    pub hash: String,
    /// The parsed document, for the manifest.
    pub echo: serde_json::Value,
}

#[derive(Deserialize)]
struct Header {
    experiment: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    #[allow(dead_code)]
    experiment: String,
    #[serde(default)]
    seed: u64,
    output_dir: Option<PathBuf>,
    model: ModelSpec,
    params: Option<P>,
}

fn document<P: DeserializeOwned>(text: &str) -> Result<(u64, Option<PathBuf>, ModelSpec, P), ConfigError> {
    let d: Document<P> = toml::from_str(text).map_err(|e| from_toml(text, e))?;
    let params = match d.params {
        Some(p) => p,
        None => toml::from_str("").map_err(|e| ConfigError::new(format!("[params]: {}", e.message().trim())))?,
    };
    Ok((d.seed, d.output_dir, d.model, params))
}

fn check(ok: bool, text: &str, key: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::at(param_line(text, key), format!("params.{key}: {message}")))
    }
}

fn validate(params: &Params, text: &str) -> Result<(), ConfigError> {
    let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|&x| x > 0.0 && x.is_finite());
    match params {
        Params::LrBound(p) => {
            check(!p.times.is_empty() && p.times.iter().all(|t| t.is_finite() && *t >= 0.0), text, "times", "need a nonempty list of nonnegative times")?;
            check(!p.distances.is_empty() && p.distances.iter().all(|&d| d > 0), text, "distances", "need a nonempty list of positive distances")?;
            check(positive(&p.mu_grid), text, "mu_grid", "need a nonempty list of positive values")?;
            check(p.k_max != Some(0), text, "k_max", "must be at least 1")?;
        }
        Params::CorrDecay(p) => {
            check(!p.operators.is_empty(), text, "operators", "need at least one of \"x\", \"y\", \"z\"")?;
            check(positive(&p.alpha_fractions), text, "alpha_fractions", "need a nonempty list of positive values")?;
            check(p.max_distance.is_none_or(|d| d >= 1), text, "max_distance", "must be at least 1")?;
            check(p.fit_max_distance.is_none_or(|d| d >= 3), text, "fit_max_distance", "the decay fit needs at least 3")?;
        }
        Params::Lsm(p) => {
            check(p.sizes.as_ref().is_none_or(|s| !s.is_empty()), text, "sizes", "must not be empty")?;
        }
        Params::SpectralFlow(p) => {
            check(p.grid_points >= 2, text, "grid_points", "must be at least 2")?;
            check(p.levels >= 2, text, "levels", "must be at least 2")?;
        }
        Params::Berry(p) => check(p.n >= 2, text, "n", "must be at least 2")?,
        Params::Hall(p) => {
            check(p.n >= 2, text, "n", "must be at least 2")?;
            check(p.radius.is_none_or(|r| r > 0.0 && r.is_finite()), text, "radius", "must be positive")?;
            check(p.steps >= 2, text, "steps", "must be at least 2")?;
            check(p.delta_fraction > 0.0 && p.delta_fraction.is_finite(), text, "delta_fraction", "must be positive")?;
            check(p.tiling_steps.is_none_or(|s| s >= 2), text, "tiling_steps", "must be at least 2")?;
        }
        Params::Transport(p) => {
            check(!p.steps.is_empty() && p.steps.iter().all(|&s| s >= 2), text, "steps", "need step counts of at least 2")?;
            check(p.delta_fraction > 0.0 && p.delta_fraction.is_finite(), text, "delta_fraction", "must be positive")?;
        }
    }
    Ok(())
}

/// Parses and validates a config; `seed` overrides the file's seed.
pub fn parse(text: &str, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let header: Header = toml::from_str(text).map_err(|e| from_toml(text, e))?;
    let Some(exp) = header.experiment else {
        return Err(ConfigError::new("missing required key `experiment`"));
    };
    let line = Some(line_of(text, exp.span().start));
    let name = exp.into_inner();
    let Some(entry) = catalog::find(&name) else {
        return Err(ConfigError::at(
            line,
            format!("unknown experiment kind `{name}`; did you mean `{}`?", catalog::nearest(&name)),
        ));
    };
    let (file_seed, output_dir, model, params) = match entry.kind {
        "lr-bound" => wrap(document(text)?, Params::LrBound),
        "corr-decay" => wrap(document(text)?, Params::CorrDecay),
        "lsm" => wrap(document(text)?, Params::Lsm),
        "spectral-flow" => wrap(document(text)?, Params::SpectralFlow),
        "berry" => wrap(document(text)?, Params::Berry),
        "hall" => wrap(document(text)?, Params::Hall),
        "transport" => wrap(document(text)?, Params::Transport),
        other => unreachable!("catalog kind {other} has no schema"),
    };
    if !entry.models.contains(&model.name()) {
        let mline = text.lines().position(|l| l.trim() == "[model]").map(|i| i + 1);
        return Err(ConfigError::at(
            mline,
            format!("experiment `{}` does not accept model `{}`; expected one of {}", entry.kind, model.name(), entry.models.join(", ")),
        ));
    }
    validate(&params, text)?;
    let table: toml::Table = toml::from_str(text).map_err(|e| from_toml(text, e))?;
    let echo = serde_json::to_value(&table).map_err(|e| ConfigError::new(e.to_string()))?;
    Ok(ExperimentConfig {
        kind: entry.kind,
        seed: seed.unwrap_or(file_seed),
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from("out")),
        model,
        params,
        hash: hex(&Sha256::digest(text.as_bytes())),
        echo,
    })
}

fn wrap<P>(d: (u64, Option<PathBuf>, ModelSpec, P), f: impl FnOnce(P) -> Params) -> (u64, Option<PathBuf>, ModelSpec, Params) {
    (d.0, d.1, d.2, f(d.3))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
