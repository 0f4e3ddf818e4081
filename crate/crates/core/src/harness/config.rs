//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "grid": {
//!     "upstream": [{ "v_ref": 315.0, "r_droop": 0.1, "r_line": 0.67, "r_load": 99.0 }, ...],
//!     "downstream": { "v_ref": 315.0, "r_droop": 0.1, "r_line": 0.81, "r_load": 99.0 }
//!   },
//!   "task": { "direction": "clockwise" },
//!   "encoding": { "amplitude": 1.0 },
//!   "overrides": { "delta_r": [...], "v_sec": [...] }
//! }
//! ```
//!
//! `task` may instead carry explicit `weights` with a one-based `anchor`.
//! `overrides` bypasses the compiler for whichever vector it supplies; a
//! `delta_r` override without `v_sec` still gets compiled secondary offsets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::Direction;
use crate::compiler::{compile_droop_offsets, compile_secondary_offsets, WeightTask};
use crate::grid::{canonical_grid, validate, ControlProgram, GridSpec};
use crate::steady_state::SolveSettings;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskConfig>,
    #[serde(default)]
    pub encoding: EncodingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Overrides>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// One-based upstream node number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingConfig {
    /// Reference step for a set pixel, V.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            amplitude: default_amplitude(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_sec: Option<Vec<f64>>,
}

/// What the configuration asks the grid to compute.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskChoice {
    Rotation(Direction),
    Weights(WeightTask),
}

impl Config {
    /// The reference grid with a clockwise rotation task.
    pub fn canonical() -> Self {
        Self {
            grid: canonical_grid(),
            task: Some(TaskConfig {
                direction: Some(Direction::Clockwise),
                ..TaskConfig::default()
            }),
            encoding: EncodingConfig::default(),
            overrides: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Pretty-printed JSON, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    fn check(&self) -> Result<()> {
        let report = validate(&self.grid, &ControlProgram::zero(&self.grid));
        if !report.is_ok() {
            return Err(Error::Config(format!("grid: {report}")));
        }
        let amplitude = self.encoding.amplitude;
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "encoding amplitude must be positive, got {amplitude}"
            )));
        }
        self.task_choice()?;
        if let Some(overrides) = &self.overrides {
            let n = self.grid.n_ders();
            for (name, values) in [("delta_r", &overrides.delta_r), ("v_sec", &overrides.v_sec)] {
                if let Some(values) = values {
                    if values.len() != n {
                        return Err(Error::Config(format!(
                            "overrides.{name} has {} entries, grid has {n} DERs",
                            values.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The configured task, if any. Explicit weights win over a direction.
    pub fn task_choice(&self) -> Result<Option<TaskChoice>> {
        let Some(task) = &self.task else {
            return Ok(None);
        };
        match (&task.weights, task.anchor, task.direction) {
            (Some(weights), Some(anchor), _) => {
                if anchor == 0 {
                    return Err(Error::Config("task.anchor is one-based".into()));
                }
                let task = WeightTask::new(weights.clone(), anchor - 1)
                    .map_err(|e| Error::Config(e.to_string()))?;
                if task.weights.len() != self.grid.n_upstream() {
                    return Err(Error::Config(format!(
                        "task has {} weights, grid has {} upstream DERs",
                        task.weights.len(),
                        self.grid.n_upstream()
                    )));
                }
                Ok(Some(TaskChoice::Weights(task)))
            }
            (Some(_), None, _) => Err(Error::Config("task.weights requires task.anchor".into())),
            (None, _, Some(direction)) => Ok(Some(TaskChoice::Rotation(direction))),
            (None, _, None) => Ok(None),
        }
    }

    /// Compiles `task` into a program with zero inputs, honouring any overrides.
    pub fn program_for(
        &self,
        task: &WeightTask,
        settings: &SolveSettings,
    ) -> Result<ControlProgram> {
        let overrides = self.overrides.clone().unwrap_or_default();
        let delta_r = match overrides.delta_r {
            Some(delta_r) => delta_r,
            None => compile_droop_offsets(&self.grid, task).map_err(|e| e.context("compile"))?,
        };
        let v_sec = match overrides.v_sec {
            Some(v_sec) => v_sec,
            None => compile_secondary_offsets(&self.grid, &delta_r, settings)
                .map_err(|e| e.context("secondary offsets"))?,
        };
        let program = ControlProgram {
            delta_r,
            v_sec,
            dv_ref: vec![0.0; self.grid.n_upstream()],
        };
        validate(&self.grid, &program).into_result()?;
        Ok(program)
    }
}
