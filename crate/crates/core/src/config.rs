//! Run configuration, stored as TOML.
//!
//! ```toml
//! experiment = "coarsening"
//!
//! [model]
//! eps = 0.04
//! kappa = 0.125
//! a = 1.0
//!
//! [grid]
//! n = 128
//! length = 3.2
//!
//! [[schedule]]
//! t_end = 400.0
//! dt = 0.004
//! ```
//!
//! Unknown keys are rejected.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::schemes::{Scheme, StartupPolicy};

/// Overrides `[output] dir` when set.
pub const OUTPUT_DIR_ENV: &str = "NSS_ETD_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    Coarsening,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

/// Constant step `dt` until `t_end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Uniform noise in `[-amplitude, amplitude]`, mean removed.
    #[default]
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub kind: InitialKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Apply `exp(-dt0 L_N)` once, `dt0` being the first scheduled step.
    #[serde(default = "default_true")]
    pub smooth: bool,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            kind: InitialKind::Random,
            seed: 0,
            amplitude: default_amplitude(),
            smooth: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Time between trace samples.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Time between checkpoints; none when absent. A final checkpoint is
    /// always written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<f64>,
    /// Record the modified energy in the trace.
    #[serde(default = "default_true")]
    pub modified_energy: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            sample_interval: default_sample_interval(),
            checkpoint_interval: None,
            modified_energy: true,
        }
    }
}

/// Manufactured-solution accuracy study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub ns: Vec<usize>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// `dt = dt_over_h * L / N`
    #[serde(default = "default_dt_over_h")]
    pub dt_over_h: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    /// Worker threads; 0 means one per available core.
    #[serde(default)]
    pub threads: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            ns: (64..=192).step_by(16).collect(),
            t_final: default_t_final(),
            dt_over_h: default_dt_over_h(),
            length: default_length(),
            threads: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub model: ModelParams,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub startup: StartupPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<Segment>,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
}

fn default_amplitude() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_sample_interval() -> f64 {
    1.0
}
fn default_t_final() -> f64 {
    1.0
}
fn default_dt_over_h() -> f64 {
    0.5
}
fn default_length() -> f64 {
    1.0
}
fn default_scheme() -> Scheme {
    Scheme::Etd3
}

impl RunConfig {
    /// Desk-scale coarsening: `eps = 0.04`, `L = 3.2`, `N = 128` up to `t = 400`.
    pub fn desk_coarsening() -> Self {
        Self {
            experiment: ExperimentKind::Coarsening,
            model: ModelParams::new(0.04, 0.125, 1.0),
            scheme: Scheme::Etd3,
            startup: StartupPolicy::CopyInitial,
            grid: Some(GridConfig { n: 128, length: 3.2 }),
            schedule: vec![Segment { t_end: 400.0, dt: 0.004 }],
            initial: InitialData { seed: 2018, ..InitialData::default() },
            output: OutputConfig {
                dir: PathBuf::from("output/desk"),
                sample_interval: 1.0,
                checkpoint_interval: Some(100.0),
                modified_energy: true,
            },
            convergence: None,
        }
    }

    /// Full-scale coarsening: `eps = 0.02`, `L = 12.8`, `N = 512` up to `t = 3e5`.
    pub fn full_coarsening() -> Self {
        Self {
            model: ModelParams::new(0.02, 0.125, 1.0),
            grid: Some(GridConfig { n: 512, length: 12.8 }),
            schedule: vec![
                Segment { t_end: 400.0, dt: 0.004 },
                Segment { t_end: 6000.0, dt: 0.04 },
                Segment { t_end: 3.0e5, dt: 0.16 },
            ],
            output: OutputConfig {
                dir: PathBuf::from("output/full"),
                sample_interval: 1.0,
                checkpoint_interval: Some(1000.0),
                modified_energy: true,
            },
            ..Self::desk_coarsening()
        }
    }

    /// Third-order accuracy study with `eps = 0.5`, `kappa = 1/8`, `A = 1`.
    pub fn convergence_study() -> Self {
        Self {
            experiment: ExperimentKind::Convergence,
            model: ModelParams::new(0.5, 0.125, 1.0),
            scheme: Scheme::Etd3,
            startup: StartupPolicy::CopyInitial,
            grid: None,
            schedule: Vec::new(),
            initial: InitialData::default(),
            output: OutputConfig { dir: PathBuf::from("output/convergence"), ..OutputConfig::default() },
            convergence: Some(ConvergenceConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let o = &self.output;
        if !(o.sample_interval > 0.0 && o.sample_interval.is_finite()) {
            return Err(Error::invalid("output.sample_interval must be positive"));
        }
        if let Some(c) = o.checkpoint_interval {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid("output.checkpoint_interval must be positive"));
            }
        }
        match self.experiment {
            ExperimentKind::Coarsening => {
                let g = self.grid.ok_or_else(|| Error::invalid("coarsening needs a [grid] section"))?;
                if g.n < 4 || !(g.length > 0.0 && g.length.is_finite()) {
                    return Err(Error::invalid(format!("bad grid n = {}, length = {}", g.n, g.length)));
                }
                validate_schedule(&self.schedule)?;
                let a = self.initial.amplitude;
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::invalid("initial.amplitude must be nonnegative"));
                }
            }
            ExperimentKind::Convergence => {
                let c = self
                    .convergence
                    .as_ref()
                    .ok_or_else(|| Error::invalid("convergence needs a [convergence] section"))?;
                if c.ns.len() < 2 {
                    return Err(Error::invalid("convergence.ns needs at least two grid sizes"));
                }
                if c.ns.windows(2).any(|w| w[1] <= w[0]) || c.ns[0] < 4 {
                    return Err(Error::invalid("convergence.ns must be strictly increasing and >= 4"));
                }
                for (name, v) in [("t_final", c.t_final), ("dt_over_h", c.dt_over_h), ("length", c.length)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::invalid(format!("convergence.{name} must be positive")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }

    pub fn grid_config(&self) -> Result<GridConfig> {
        self.grid.ok_or_else(|| Error::invalid("config has no [grid] section"))
    }

    pub fn final_time(&self) -> Option<f64> {
        self.schedule.last().map(|s| s.t_end)
    }

    /// Scheduled step in force at time `t`.
    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.schedule.iter().find(|s| t < s.t_end)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Ok(cfg)
    }
}

pub fn validate_schedule(schedule: &[Segment]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule is empty"));
    }
    let mut prev = 0.0;
    for (i, s) in schedule.iter().enumerate() {
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::invalid(format!("schedule[{i}].dt must be positive, got {}", s.dt)));
        }
        if !(s.t_end > prev && s.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "schedule[{i}].t_end = {} must exceed the previous end {prev}",
                s.t_end
            )));
        }
        prev = s.t_end;
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::from_toml(&text, path)
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    crate::checkpoint::write_atomic(path, cfg.to_toml()?.as_bytes())
}
