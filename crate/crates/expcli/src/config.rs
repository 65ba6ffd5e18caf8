//! Experiment configuration: presets, key=value / JSON parsing, validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use kmdflow::sphere_relu::FlowMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Coulomb kernel, exponential convergence.
    Coulomb,
    /// Riesz kernel with `s > 1`, algebraic convergence.
    RieszS,
    /// Arccos/ReLU kernel on the circle, particle flow.
    Relu,
    Custom,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "coulomb" | "a" => Ok(Self::Coulomb),
            "riesz_s" | "riesz" | "b" => Ok(Self::RieszS),
            "relu" | "c" => Ok(Self::Relu),
            "custom" => Ok(Self::Custom),
            _ => Err(CliError::Config(format!("unknown preset `{s}`"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Coulomb => "coulomb",
            Self::RieszS => "riesz_s",
            Self::Relu => "relu",
            Self::Custom => "custom",
        })
    }
}

/// How `μ̄` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Random density with regularity `gamma0` and minimum `min0`.
    Random,
    /// Uniform density (`γ₀ = ∞`).
    Uniform,
    /// Random density with a planted zero region of width `hole_width`.
    Hole,
    /// `μ̄ = ν`.
    Target,
}

impl FromStr for Init {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "uniform" => Ok(Self::Uniform),
            "hole" => Ok(Self::Hole),
            "target" | "nu" => Ok(Self::Target),
            _ => Err(CliError::Config(format!("unknown init `{s}`"))),
        }
    }
}

fn parse_mode(s: &str) -> Result<FlowMode, CliError> {
    match s.to_ascii_uppercase().as_str() {
        "W" => Ok(FlowMode::Wasserstein),
        "WFR" => Ok(FlowMode::Wfr),
        _ => Err(CliError::Config(format!("unknown mode `{s}` (expected W or WFR)"))),
    }
}

/// Fully resolved experiment configuration.
///
/// Optional fields are filled by [`ExperimentConfig::resolve`]; the manifest
/// records the resolved values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub s: f64,
    pub gamma0: f64,
    pub gamma_nu: f64,
    pub min0: f64,
    pub min_nu: f64,
    pub n_cells: usize,
    pub n_particles: usize,
    pub t_end: f64,
    pub seed: u64,
    pub mode: FlowMode,
    pub output_path: PathBuf,
    pub sample_interval: Option<f64>,
    pub cfl: f64,
    pub dt_max: Option<f64>,
    /// Highest frequency of the random densities; `n_cells / 4` if unset.
    pub band_limit: Option<usize>,
    pub init: Init,
    pub hole_width: f64,
    pub hole_ramp: f64,
    pub sublevel_a: Option<f64>,
    pub hgamma: Option<f64>,
    pub w2: bool,
    pub snapshots: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Custom)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            preset,
            s: 1.5,
            gamma0: 1.0,
            gamma_nu: 1.0,
            min0: 0.2,
            min_nu: 0.2,
            n_cells: 512,
            n_particles: 800,
            t_end: 100.0,
            seed: 0,
            mode: FlowMode::Wasserstein,
            output_path: PathBuf::from("out"),
            sample_interval: None,
            cfl: 0.45,
            dt_max: None,
            band_limit: None,
            init: Init::Random,
            hole_width: 0.3,
            hole_ramp: 0.05,
            sublevel_a: None,
            hgamma: None,
            w2: false,
            snapshots: Vec::new(),
        };
        match preset {
            Preset::Coulomb => Self { s: 1.0, t_end: 40.0, dt_max: Some(0.05), w2: true, ..base },
            Preset::RieszS => Self { s: 2.0, gamma0: 2.0, gamma_nu: 4.0, t_end: 1e4, dt_max: Some(1.0), ..base },
            Preset::Relu => Self {
                s: 2.0,
                gamma_nu: 2.0,
                n_cells: 4096,
                t_end: 200.0,
                dt_max: Some(0.5),
                band_limit: Some(512),
                init: Init::Uniform,
                ..base
            },
            Preset::Custom => base,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))?;
        // start from the named preset so omitted keys take its values
        let preset = match value.get("preset").and_then(|p| p.as_str()) {
            Some(p) => p.parse()?,
            None => Preset::Custom,
        };
        let mut merged = serde_json::to_value(Self::preset(preset)).expect("config serializes");
        match (&mut merged, value) {
            (serde_json::Value::Object(base), serde_json::Value::Object(over)) => {
                for (k, v) in over {
                    if !base.contains_key(&k) {
                        return Err(CliError::Config(format!("unknown key `{k}`")));
                    }
                    base.insert(k, v);
                }
            }
            _ => return Err(CliError::Config("JSON config must be an object".into())),
        }
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))
    }

    /// Parses `key = value` lines; `#` starts a comment. A `preset` line, if
    /// present, is applied first.
    pub fn from_key_values(text: &str) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key=value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut config = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, p)) => Self::preset(p.parse()?),
            None => Self::default(),
        };
        for (k, v) in &pairs {
            if k != "preset" {
                config.set(k, v)?;
            }
        }
        Ok(config)
    }

    /// Loads a config file: JSON if it starts with `{`, key=value otherwise.
    pub fn load(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_key_values(text)
        }
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
            v.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
        }
        fn opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>, CliError> {
            if v.is_empty() || v == "none" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key.replace('-', "_").as_str() {
            "preset" => self.preset = value.parse()?,
            "s" => self.s = num(key, value)?,
            "gamma0" => self.gamma0 = num(key, value)?,
            "gamma_nu" => self.gamma_nu = num(key, value)?,
            "min0" => self.min0 = num(key, value)?,
            "min_nu" => self.min_nu = num(key, value)?,
            "n_cells" | "cells" => self.n_cells = num(key, value)?,
            "n_particles" | "particles" => self.n_particles = num(key, value)?,
            "t_end" | "tend" => self.t_end = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "mode" => self.mode = parse_mode(value)?,
            "output_path" | "out" => self.output_path = PathBuf::from(value),
            "sample_interval" => self.sample_interval = opt(key, value)?,
            "cfl" => self.cfl = num(key, value)?,
            "dt_max" => self.dt_max = opt(key, value)?,
            "band_limit" => self.band_limit = opt(key, value)?,
            "init" => self.init = value.parse()?,
            "hole_width" => self.hole_width = num(key, value)?,
            "hole_ramp" => self.hole_ramp = num(key, value)?,
            "sublevel_a" => self.sublevel_a = opt(key, value)?,
            "hgamma" => self.hgamma = opt(key, value)?,
            "w2" => self.w2 = num(key, value)?,
            "snapshots" => {
                self.snapshots = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| num(key, v))
                    .collect::<Result<_, _>>()?
            }
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Fills defaults that depend on other fields and checks consistency.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match self.preset {
            Preset::Coulomb if self.s != 1.0 => return bad(format!("preset coulomb requires s = 1, got {}", self.s)),
            Preset::RieszS if self.s <= 1.0 => return bad(format!("preset riesz_s requires s > 1, got {}", self.s)),
            Preset::Relu if self.s != 2.0 => return bad(format!("preset relu fixes s = 2, got {}", self.s)),
            _ => {}
        }
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return bad(format!("s must be finite and ≥ 1, got {}", self.s));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if self.n_cells < 8 || !self.n_cells.is_multiple_of(2) {
            return bad(format!("n_cells must be even and at least 8, got {}", self.n_cells));
        }
        if self.preset == Preset::Relu && self.n_particles == 0 {
            return bad("n_particles must be positive".into());
        }
        for (name, m) in [("min0", self.min0), ("min_nu", self.min_nu)] {
            if !(0.0..1.0).contains(&m) {
                return bad(format!("{name} must lie in [0, 1), got {m}"));
            }
        }
        for (name, g) in [("gamma0", self.gamma0), ("gamma_nu", self.gamma_nu)] {
            if !(g > 0.0) {
                return bad(format!("{name} must be positive, got {g}"));
            }
        }
        let interval = *self.sample_interval.get_or_insert(self.t_end / 400.0);
        let dt_max = *self.dt_max.get_or_insert(self.t_end / 400.0);
        if !(interval > 0.0 && dt_max > 0.0) {
            return bad("sample_interval and dt_max must be positive".into());
        }
        let band = *self.band_limit.get_or_insert(self.n_cells / 4);
        if band == 0 || band > self.n_cells / 2 {
            return bad(format!("band_limit must lie in [1, n_cells/2], got {band}"));
        }
        if let Some(a) = self.sublevel_a {
            if a < 0.0 {
                return bad(format!("sublevel_a must be nonnegative, got {a}"));
            }
        }
        if self.snapshots.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return bad("snapshot times must lie in [0, t_end]".into());
        }
        if self.preset == Preset::Relu {
            if !self.snapshots.is_empty() {
                return bad("snapshots are only available for grid flows".into());
            }
            if self.init == Init::Hole {
                return bad("init = hole is only available for grid flows".into());
            }
        }
        Ok(self)
    }

    /// Regularity of `μ̄` used by the predictions: infinite for a uniform start.
    pub fn effective_gamma0(&self) -> f64 {
        match self.init {
            Init::Uniform => f64::INFINITY,
            _ => self.gamma0,
        }
    }
}
