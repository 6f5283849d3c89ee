//! TOML run configuration with dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barriers::BarrierOptions;
use crate::integrate::Tolerance;
use crate::parabolic::{EvolveControls, GridSpec, WeightSpec};
use crate::potential::{PotentialConfig, PotentialSpec};
use crate::shooting::ShootOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration")]
    Syntax(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
    #[error("override `{key}` descends into non-table `{at}`")]
    OverridePath { key: String, at: String },
    #[error("invalid potential")]
    Potential(#[from] crate::potential::PotentialError),
    #[error("invalid value for {field}: {reason}")]
    Value { field: &'static str, reason: String },
}

/// Shooting tolerances and the sampled radial range of stationary profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub extension: f64,
    pub samples_per_decade: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Tolerances for barrier pieces, which need a purely relative control.
    pub barrier_rtol: f64,
    pub barrier_atol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let shoot = ShootOptions::default();
        let barrier = BarrierOptions::default();
        Self {
            rtol: shoot.tol.rtol,
            atol: shoot.tol.atol,
            extension: shoot.extension,
            samples_per_decade: shoot.samples_per_decade,
            r_min: barrier.r_min,
            r_max: barrier.r_max,
            barrier_rtol: barrier.shoot.tol.rtol,
            barrier_atol: barrier.shoot.tol.atol,
        }
    }
}

impl SolverConfig {
    pub fn shoot_options(&self) -> ShootOptions {
        ShootOptions {
            tol: Tolerance { rtol: self.rtol, atol: self.atol },
            extension: self.extension,
            samples_per_decade: self.samples_per_decade,
        }
    }

    pub fn barrier_options(&self) -> BarrierOptions {
        BarrierOptions {
            shoot: ShootOptions {
                tol: Tolerance { rtol: self.barrier_rtol, atol: self.barrier_atol },
                ..self.shoot_options()
            },
            r_min: self.r_min,
            r_max: self.r_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierChoice {
    GroundStatePair,
    FastDecayPair,
    SlowDecayUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `amplitude · exp(−(r/width)²)`.
    Gaussian,
    /// `scale · U(r; alpha)`, clipped at zero past a crossing.
    GroundState,
    UpperBarrier,
    LowerBarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub barrier: BarrierChoice,
    pub alpha_pair: [f64; 2],
    pub tau: f64,
    pub initial: InitialData,
    pub amplitude: f64,
    pub width: f64,
    pub scale: f64,
    /// Pohozaev levels for the portrait; empty picks levels around the minimum.
    pub levels: Vec<f64>,
    /// Rerun the dichotomy with `2 r_max` and require the same fates.
    pub double_r_max: bool,
    pub fujita_r_max: f64,
    pub fujita_decay_floor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            alphas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            barrier: BarrierChoice::GroundStatePair,
            alpha_pair: [1.0, 2.0],
            tau: 0.0,
            initial: InitialData::Gaussian,
            amplitude: 0.1,
            width: 1.0,
            scale: 1.0,
            levels: Vec::new(),
            double_r_max: true,
            fujita_r_max: 1e6,
            fujita_decay_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Every k-th accepted step is written to the norm series CSV.
    pub series_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), series_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub evolve: EvolveControls,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = toml::from_str(text)?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<PotentialSpec, ConfigError> {
        Ok(PotentialSpec::try_from(self.potential.clone())?)
    }

    /// Range and sign checks that serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let spec = self.spec()?;
        let bad = |field: &'static str, reason: String| Err(ConfigError::Value { field, reason });
        let s = &self.solver;
        if !(s.rtol > 0.0 && s.atol >= 0.0 && s.barrier_rtol > 0.0 && s.barrier_atol >= 0.0) {
            return bad("solver", "tolerances must be positive".into());
        }
        if !(s.r_min > 0.0 && s.r_max > s.r_min && s.samples_per_decade > 0 && s.extension >= 0.0) {
            return bad("solver", "need 0 < r_min < r_max and positive sampling".into());
        }
        let g = &self.grid;
        if !(g.h0 > 0.0 && g.growth >= 1.0 && g.r_max > g.r_min && g.r_min >= 0.0) {
            return bad("grid", "need h0 > 0, growth ≥ 1 and 0 ≤ r_min < r_max".into());
        }
        if let Err(e) = self.weight.validated(&spec) {
            return bad("weight", e.to_string());
        }
        let e = &self.evolve;
        if !(e.t_end > 0.0 && e.rtol > 0.0 && e.dt_initial > 0.0 && e.outer_kappa >= 0.0 && e.inner_nu >= 0.0) {
            return bad("evolve", "t_end, rtol and dt_initial must be positive; kappa and inner_nu non-negative".into());
        }
        let x = &self.experiment;
        if x.alphas.is_empty() {
            return bad("experiment.alphas", "empty list".into());
        }
        if x.alphas.iter().chain([&x.alpha]).chain(&x.alpha_pair).any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad("experiment.alpha", "shooting heights must be positive".into());
        }
        if x.alpha_pair[0] == x.alpha_pair[1] {
            return bad("experiment.alpha_pair", "heights must differ".into());
        }
        if !(x.amplitude >= 0.0 && x.width > 0.0 && x.scale >= 0.0) {
            return bad("experiment", "amplitude and scale must be non-negative, width positive".into());
        }
        if !(x.fujita_r_max > g.r_min && x.fujita_decay_floor > 0.0) {
            return bad("experiment.fujita_r_max", "must exceed grid.r_min".into());
        }
        if self.output.series_stride == 0 {
            return bad("output.series_stride", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Sets `a.b.c = value`, parsing the value as TOML and falling back to a string.
fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(item.to_string()));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = doc;
    for (depth, part) in parents.iter().enumerate() {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError::OverridePath {
            key: key.trim().to_string(),
            at: path[..=depth].join("."),
        })?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
