//! Single cases and exhaustive 16-image sweeps of a rotation task.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{decode, digital_oracle, encode, Direction, Image2x2, RotationTask};
use crate::compiler::{calibrate, Calibration};
use crate::grid::{ControlProgram, GridSpec};
use crate::harness::config::Config;
use crate::steady_state::{delta_currents, SolveSettings};
use crate::{Error, Result};

/// Superposition tolerance, scaled by `max(1, |Δi|)`.
pub const SUPERPOSITION_TOL: f64 = 1e-9;

/// A grid programmed for one rotation direction and calibrated for decoding.
#[derive(Debug, Clone)]
pub struct ProgrammedRotation {
    pub task: RotationTask,
    pub program: ControlProgram,
    pub calibration: Calibration,
}

impl ProgrammedRotation {
    pub fn new(config: &Config, direction: Direction, settings: &SolveSettings) -> Result<Self> {
        if config.grid.n_upstream() != 4 {
            return Err(Error::Config(format!(
                "a 2x2 rotation needs 4 upstream DERs, grid has {}",
                config.grid.n_upstream()
            )));
        }
        let task = RotationTask::new(direction);
        let weights = task.weight_task();
        let program = config.program_for(&weights, settings)?;
        let calibration = calibrate(&config.grid, &program, &weights, settings)
            .map_err(|e| e.context("calibrate"))?;
        Ok(Self {
            task,
            program,
            calibration,
        })
    }

    /// Applies `image`, solves, decodes and compares against the digital oracle.
    pub fn evaluate(
        &self,
        grid: &GridSpec,
        image: Image2x2,
        amplitude: f64,
        settings: &SolveSettings,
    ) -> Result<CaseResult> {
        let direction = self.task.direction;
        let program = self.program.with_inputs(encode(&image, amplitude));
        let delta_i = delta_currents(grid, &program, settings)
            .map_err(|e| e.context(format!("solve {image} ({direction})")))?;
        let per_volt = delta_i[grid.downstream_index()] / amplitude;
        let decoded = decode(per_volt, &self.calibration)
            .map_err(|e| e.context(format!("decode {image} ({direction})")))?;
        Ok(CaseResult {
            image,
            direction,
            delta_i,
            decoded: decoded.value,
            expected: i64::from(digital_oracle(&image, &self.task)),
            residual: decoded.residual,
        })
    }
}

/// One image pushed through the programmed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub image: Image2x2,
    pub direction: Direction,
    /// Current change of every DER against the zero-input state, A.
    pub delta_i: Vec<f64>,
    pub decoded: i64,
    pub expected: i64,
    /// Distance of the unrounded decode from the nearest integer.
    pub residual: f64,
}

impl CaseResult {
    pub fn is_correct(&self) -> bool {
        self.decoded == self.expected
    }
}

/// All 16 images for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid_fingerprint: String,
    pub direction: Direction,
    pub weights: Vec<f64>,
    /// One-based node number of the anchor.
    pub anchor_node: usize,
    pub delta_r: Vec<f64>,
    pub v_sec: Vec<f64>,
    /// Downstream current change per volt per unit weight, A/V.
    pub kappa: f64,
    /// Worst scaled gap between a multi-pixel response and the sum of its one-hot parts.
    pub superposition_deviation: f64,
    pub cases: Vec<CaseResult>,
}

impl SweepReport {
    /// 16×(n+1) matrix of Δi values, rows in image order.
    pub fn heatmap(&self) -> Vec<Vec<f64>> {
        self.cases.iter().map(|c| c.delta_i.clone()).collect()
    }
}

/// Short SHA-256 fingerprint of the grid's JSON form.
pub fn grid_fingerprint(grid: &GridSpec) -> String {
    let json = serde_json::to_string(grid).expect("grid serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}

pub fn run_case(
    config: &Config,
    image: Image2x2,
    direction: Direction,
    settings: &SolveSettings,
) -> Result<CaseResult> {
    let programmed = ProgrammedRotation::new(config, direction, settings)?;
    programmed.evaluate(&config.grid, image, config.encoding.amplitude, settings)
}

/// Runs all 16 images, checks superposition against the one-hot cases and
/// fails on the first case that decodes wrongly.
pub fn sweep(
    config: &Config,
    direction: Direction,
    settings: &SolveSettings,
) -> Result<SweepReport> {
    let programmed = ProgrammedRotation::new(config, direction, settings)?;
    let amplitude = config.encoding.amplitude;
    let cases = Image2x2::all()
        .map(|image| programmed.evaluate(&config.grid, image, amplitude, settings))
        .collect::<Result<Vec<_>>>()?;

    if let Some(bad) = cases.iter().find(|c| !c.is_correct()) {
        return Err(Error::Mismatch {
            image: bad.image.to_string(),
            direction: direction.to_string(),
            decoded: bad.decoded,
            expected: bad.expected,
        });
    }

    let superposition_deviation = superposition_check(&cases, direction)?;
    let weights = programmed.task.weight_task();
    Ok(SweepReport {
        grid_fingerprint: grid_fingerprint(&config.grid),
        direction,
        weights: weights.weights,
        anchor_node: weights.anchor + 1,
        delta_r: programmed.program.delta_r,
        v_sec: programmed.program.v_sec,
        kappa: programmed.calibration.kappa,
        superposition_deviation,
        cases,
    })
}

/// Largest scaled deviation of any multi-pixel Δi vector from the sum of
/// its one-hot constituents. `cases` must be the 16 images in index order.
fn superposition_check(cases: &[CaseResult], direction: Direction) -> Result<f64> {
    let mut worst = 0.0_f64;
    for case in cases.iter().filter(|c| c.image.count_ones() > 1) {
        let mut sum = vec![0.0; case.delta_i.len()];
        for part in case.image.one_hot_parts() {
            let one_hot = &cases[usize::from(part.decimal())];
            for (s, x) in sum.iter_mut().zip(&one_hot.delta_i) {
                *s += x;
            }
        }
        let deviation = case
            .delta_i
            .iter()
            .zip(&sum)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
            .fold(0.0, f64::max);
        if deviation.is_nan() || deviation > SUPERPOSITION_TOL {
            return Err(Error::Superposition {
                image: case.image.to_string(),
                direction: direction.to_string(),
                deviation,
            });
        }
        worst = worst.max(deviation);
    }
    Ok(worst)
}
