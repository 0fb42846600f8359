//! Run configuration (TOML with `grid`, `model`, `stepper`, `initial` and `output` sections).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::norms::Constants;
use crate::spectral::Grid;
use crate::stepper::Scheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_modes: usize,
    pub lx: f64,
    pub n_y: usize,
    pub y_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_modes: 64, lx: 20.0, n_y: 256, y_max: 12.0 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n_modes, self.lx, self.n_y, self.y_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Physics {
    Full,
    BoOnly,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub tau0: f64,
    pub r: f64,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub physics: Physics,
    /// hold τ at its initial value
    pub freeze_tau: bool,
    pub constants: Constants,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { tau0: 0.1, r: 2.5, delta: None, eps: None, physics: Physics::Full, freeze_tau: false, constants: Constants::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub t_end: Option<f64>,
    pub certified: bool,
}

impl Default for StepperSection {
    fn default() -> Self {
        Self { dt: None, scheme: Scheme::Cnab2, t_end: None, certified: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub preset: Option<String>,
    /// checkpoint file
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// ledger sample cadence in steps
    pub cadence: usize,
    /// checkpoint cadence in steps, 0 for the final state only
    pub checkpoint_every: usize,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), cadence: 1, checkpoint_every: 0, formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub stepper: StepperSection,
    pub initial: InitialConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        let m = &self.model;
        if !(m.r > 2.0) {
            return Err(Error::config(format!("r must exceed 2, got {}", m.r)));
        }
        if !(m.tau0 > 0.0 && m.tau0.is_finite()) {
            return Err(Error::config(format!("tau0 must be positive, got {}", m.tau0)));
        }
        let c = &m.constants;
        if [c.c0, c.c0_tilde, c.c1, c.c2, c.c1_tilde].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("constants must be positive and finite"));
        }
        if let Some(d) = m.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config(format!("delta must be positive, got {d}")));
            }
        }
        if let Some(e) = m.eps {
            if !(e > 0.0 && e <= 1.0 / 64.0) {
                return Err(Error::config(format!("eps must lie in (0, 1/64], got {e}")));
            }
        }
        let s = &self.stepper;
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = s.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(format!("t_end must be nonnegative, got {t}")));
            }
        }
        if s.certified {
            if m.delta.is_some() || m.eps.is_some() || s.t_end.is_some() {
                return Err(Error::config("certified runs take delta, eps and T* from the parameter selector"));
            }
            if m.physics != Physics::Full || m.freeze_tau {
                return Err(Error::config("certified runs use the full model"));
            }
        }
        match (&self.initial.preset, &self.initial.file) {
            (Some(_), Some(_)) => return Err(Error::config("initial: give either preset or file, not both")),
            (None, None) => return Err(Error::config("initial: a preset or a checkpoint file is required")),
            (Some(name), None) if !crate::presets::PRESETS.contains(&name.as_str()) => {
                return Err(Error::config(format!("unknown preset '{name}'")));
            }
            _ => {}
        }
        if self.output.cadence == 0 {
            return Err(Error::config("output.cadence must be at least 1"));
        }
        Ok(())
    }
}
