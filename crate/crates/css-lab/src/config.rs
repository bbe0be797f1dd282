//! Run configuration: flat `key = value` text with `#` comments.
//!
//! Unknown keys are rejected with the offending key and line; `--set`
//! overrides go through the same validation. An empty file yields the
//! documented defaults.

use std::path::{Path, PathBuf};

use crate::datum::{DatumKind, DatumSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Grid points per axis (power of two).
    pub n: usize,
    /// Box side length.
    pub box_length: f64,
    /// Time step.
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Self-interaction coupling (real in this format version).
    pub g: f64,
    pub datum: DatumSpec,
    /// Steps between checkpoints.
    pub checkpoint_stride: usize,
    /// Two-thirds-rule dealiasing of the stage derivative.
    pub dealias: bool,
    /// Disable the gauge terms (self-interaction only; free flow at g=0).
    pub free: bool,
    /// Seed for generated verification fields.
    pub seed: u64,
    /// Output directory (the `--out` flag takes precedence).
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 256,
            box_length: 40.0,
            dt: 1e-3,
            t_end: 10.0,
            g: 1.0,
            datum: DatumSpec::default(),
            checkpoint_stride: 250,
            dealias: true,
            free: false,
            seed: 7,
            out_dir: None,
        }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "box_length",
    "dt",
    "t_end",
    "g",
    "data",
    "amplitude",
    "width",
    "momentum_x",
    "momentum_y",
    "phase_twist",
    "input_file",
    "checkpoint_stride",
    "dealias",
    "free",
    "seed",
    "out_dir",
];

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::parameter(format!(
                "n must be a power of two >= 8, got {}",
                self.n
            )));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(Error::parameter("box_length must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::parameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::parameter("g must be finite"));
        }
        if self.checkpoint_stride == 0 {
            return Err(Error::parameter("checkpoint_stride must be >= 1"));
        }
        if !(self.datum.amplitude >= 0.0) {
            return Err(Error::parameter(format!(
                "amplitude must be nonnegative, got {}",
                self.datum.amplitude
            )));
        }
        Ok(())
    }

    /// Parse a config file, then apply `key=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        let mut config = RunConfig::default();
        let name = path.display().to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    path: name.clone(),
                    line: lineno + 1,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            config
                .apply(key.trim(), value.trim())
                .map_err(|msg| Error::Config {
                    path: name.clone(),
                    line: lineno + 1,
                    msg,
                })?;
        }
        config.apply_overrides(overrides)?;
        config.validate()?;
        Ok(config)
    }

    /// Apply `KEY=VALUE` override strings (from `--set`).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for entry in overrides {
            let Some((key, value)) = entry.split_once('=') else {
                return Err(Error::Config {
                    path: "--set".into(),
                    line: 0,
                    msg: format!("expected KEY=VALUE, got '{entry}'"),
                });
            };
            self.apply(key.trim(), value.trim())
                .map_err(|msg| Error::Config {
                    path: "--set".into(),
                    line: 0,
                    msg,
                })?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("key '{key}': cannot parse '{value}'"))
        }
        fn flag(key: &str, value: &str) -> std::result::Result<bool, String> {
            match value {
                "on" | "true" | "1" | "yes" => Ok(true),
                "off" | "false" | "0" | "no" => Ok(false),
                _ => Err(format!("key '{key}': expected on/off, got '{value}'")),
            }
        }
        match key {
            "n" => {
                let n: usize = num(key, value)?;
                if n < 8 || !n.is_power_of_two() {
                    return Err(format!("key 'n': must be a power of two >= 8, got {n}"));
                }
                self.n = n;
            }
            "box_length" => self.box_length = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "g" => self.g = num(key, value)?,
            "data" => {
                self.datum.kind = match value {
                    "gaussian" => DatumKind::Gaussian,
                    "plane_wave" => DatumKind::PlaneWave,
                    "ring" => DatumKind::Ring,
                    "file" => DatumKind::File,
                    _ => {
                        return Err(format!(
                            "key 'data': expected gaussian|plane_wave|ring|file, got '{value}'"
                        ))
                    }
                };
            }
            "amplitude" => self.datum.amplitude = num(key, value)?,
            "width" => self.datum.width = num(key, value)?,
            "momentum_x" => self.datum.momentum.0 = num(key, value)?,
            "momentum_y" => self.datum.momentum.1 = num(key, value)?,
            "phase_twist" => self.datum.phase_twist = num(key, value)?,
            "input_file" => self.datum.file = Some(PathBuf::from(value)),
            "checkpoint_stride" => self.checkpoint_stride = num(key, value)?,
            "dealias" => self.dealias = flag(key, value)?,
            "free" => self.free = flag(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }
}
