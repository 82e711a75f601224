//! Run configuration files.
//!
//! Configs are JSON documents; unknown keys are rejected. Complex numbers
//! are written `{"re": ..., "im": ...}` with `im` defaulting to 0.
//!
//! ```json
//! {
//!   "params": {
//!     "alpha1": {"re": 0.0}, "alpha2": {"re": 0.0},
//!     "beta1": {"re": 1.0}, "beta2": {"re": -1.0}
//!   },
//!   "omega": 1.0,
//!   "x0": {"x1": {"re": 2.0}, "x2": {"re": 1.0}},
//!   "grid": {"t_end": 4.0, "num_samples": 401},
//!   "integrator": {"rel_tol": 1e-10},
//!   "seed": 0,
//!   "output": {"dir": "out", "format": "csv"},
//!   "sweep": {"draws": 200, "ranges": {"beta1": {"re": [0.5, 2.0]}}}
//! }
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twomode::{IntegratorConfig, IsochronousParams, ModelParams, State};

use crate::CliError;

/// Number of samples when the grid gives only `t_end`.
pub const DEFAULT_SAMPLES: usize = 401;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_DRAWS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha1: ComplexValue,
    pub alpha2: ComplexValue,
    pub beta1: ComplexValue,
    pub beta2: ComplexValue,
}

impl ParamsConfig {
    pub fn to_model(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(
            self.alpha1.into(),
            self.alpha2.into(),
            self.beta1.into(),
            self.beta2.into(),
        )
        .map_err(|e| CliError::Config(format!("params: {e}")))
    }
}

impl From<&ModelParams> for ParamsConfig {
    fn from(p: &ModelParams) -> Self {
        Self {
            alpha1: p.alpha1.into(),
            alpha2: p.alpha2.into(),
            beta1: p.beta1.into(),
            beta2: p.beta2.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub x1: ComplexValue,
    pub x2: ComplexValue,
}

impl From<StateConfig> for State {
    fn from(s: StateConfig) -> Self {
        State::new(s.x1.into(), s.x2.into())
    }
}

impl From<&State> for StateConfig {
    fn from(s: &State) -> Self {
        Self {
            x1: s.x1.into(),
            x2: s.x2.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: Option<f64>,
    pub num_samples: Option<usize>,
    /// Explicit sample times; excludes `t_end` and `num_samples`.
    pub times: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        if let Some(times) = &self.times {
            if self.t_end.is_some() || self.num_samples.is_some() {
                return Err(CliError::Config(
                    "grid: `times` cannot be combined with `t_end` or `num_samples`".into(),
                ));
            }
            if times.is_empty() {
                return Err(CliError::Config("grid.times: must not be empty".into()));
            }
            if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(CliError::Config("grid.times: must be finite and >= 0".into()));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Config("grid.times: must be strictly increasing".into()));
            }
            return Ok(times.clone());
        }
        let t_end = self.t_end.unwrap_or(DEFAULT_T_END);
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(CliError::Config("grid.t_end: must be finite and >= 0".into()));
        }
        let n = self.num_samples.unwrap_or(DEFAULT_SAMPLES);
        if n == 0 {
            return Err(CliError::Config("grid.num_samples: must be positive".into()));
        }
        Ok(twomode::verify::uniform_grid(t_end, n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOverrides {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub initial_step: Option<f64>,
    pub min_step: Option<f64>,
    pub max_steps: Option<usize>,
    pub singular_guard: Option<f64>,
}

impl IntegratorOverrides {
    pub fn apply(&self) -> Result<IntegratorConfig, CliError> {
        let d = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            initial_step: self.initial_step.or(d.initial_step),
            min_step: self.min_step.or(d.min_step),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            singular_guard: self.singular_guard.unwrap_or(d.singular_guard),
        };
        cfg.validate()
            .map_err(|e| CliError::Config(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Closed interval `[lo, hi]` for the real and imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexRange {
    #[serde(default = "default_range")]
    pub re: [f64; 2],
    #[serde(default = "zero_range")]
    pub im: [f64; 2],
}

fn default_range() -> [f64; 2] {
    [-2.0, 2.0]
}

fn zero_range() -> [f64; 2] {
    [0.0, 0.0]
}

impl Default for ComplexRange {
    fn default() -> Self {
        Self {
            re: default_range(),
            im: default_range(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRanges {
    #[serde(default)]
    pub alpha1: ComplexRange,
    #[serde(default)]
    pub alpha2: ComplexRange,
    #[serde(default)]
    pub beta1: ComplexRange,
    #[serde(default)]
    pub beta2: ComplexRange,
    #[serde(default)]
    pub x1: ComplexRange,
    #[serde(default)]
    pub x2: ComplexRange,
}

impl SweepRanges {
    pub fn all(&self) -> [(&'static str, &ComplexRange); 6] {
        [
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("x1", &self.x1),
            ("x2", &self.x2),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub draws: Option<usize>,
    #[serde(default)]
    pub ranges: SweepRanges,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Option<ParamsConfig>,
    pub omega: Option<f64>,
    pub x0: Option<StateConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub integrator: IntegratorOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        self.params
            .as_ref()
            .ok_or_else(|| CliError::Config("missing field `params`".into()))?
            .to_model()
    }

    pub fn isochronous(&self) -> Result<Option<IsochronousParams>, CliError> {
        match self.omega {
            None => Ok(None),
            Some(w) => IsochronousParams::new(self.model()?, w)
                .map(Some)
                .map_err(|e| CliError::Config(format!("omega: {e}"))),
        }
    }

    pub fn initial_state(&self) -> Result<State, CliError> {
        let x0: State = self
            .x0
            .ok_or_else(|| CliError::Config("missing field `x0`".into()))?
            .into();
        if !x0.is_finite() {
            return Err(CliError::Config("x0: must be finite".into()));
        }
        Ok(x0)
    }
}
