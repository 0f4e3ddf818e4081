//! Compiles target weights into droop-gain and secondary-reference offsets,
//! and measures the weights a programmed grid actually realises.
//!
//! A unit step on upstream reference `k` moves the downstream current by an
//! amount proportional to `1 / (r_k·λ_k - (R_d,k + ΔR_k))`, with a factor
//! common to all inputs. The compiler fixes the anchor bus's offset at zero
//! and solves the (affine in ΔR) denominator of every other bus so that the
//! reciprocals stand in the requested ratios.

use serde::{Deserialize, Serialize};

use crate::grid::{validate, ControlProgram, GridSpec, Violation};
use crate::steady_state::{delta_currents, solve_nodal, SolveSettings, StarTerms};
use crate::{Error, Result};

/// Target weights for the upstream inputs plus the bus whose droop offset stays at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTask {
    pub weights: Vec<f64>,
    /// Zero-based upstream position.
    pub anchor: usize,
}

impl WeightTask {
    pub fn new(weights: Vec<f64>, anchor: usize) -> Result<Self> {
        let task = Self { weights, anchor };
        task.check(None)?;
        Ok(task)
    }

    fn check(&self, n_upstream: Option<usize>) -> Result<()> {
        if let Some(n) = n_upstream {
            if self.weights.len() != n {
                return Err(Error::InvalidTask(format!(
                    "{} weights for {n} upstream DERs",
                    self.weights.len()
                )));
            }
        }
        if let Some((k, w)) = self
            .weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidTask(format!(
                "weight {} = {w} is not strictly positive",
                k + 1
            )));
        }
        if self.anchor >= self.weights.len() {
            return Err(Error::InvalidTask(format!(
                "anchor {} is outside 1..={}",
                self.anchor + 1,
                self.weights.len()
            )));
        }
        Ok(())
    }

    pub fn anchor_weight(&self) -> f64 {
        self.weights[self.anchor]
    }
}

/// Downstream current response per volt of input per unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// A/V per unit weight.
    pub kappa: f64,
    /// Zero-based upstream position the response was probed at.
    pub anchor: usize,
}

/// Droop offsets realising `task` on `grid`; the anchor and downstream entries are zero.
///
/// With `g_k = 1 + r_k/R_load,k` the denominator is `d_k(0) - ΔR_k·g_k`,
/// so the offset hitting target `c_k = d_anchor·w_anchor/w_k` is
/// `ΔR_k = (d_k(0) - c_k) / g_k`.
pub fn compile_droop_offsets(grid: &GridSpec, task: &WeightTask) -> Result<Vec<f64>> {
    task.check(Some(grid.n_upstream()))?;
    let anchor = task.anchor;
    let anchor_denominator = grid.upstream[anchor].weight_denominator(0.0);

    let mut delta_r: Vec<f64> = grid
        .upstream
        .iter()
        .zip(&task.weights)
        .enumerate()
        .map(|(k, (der, w))| {
            if k == anchor {
                return 0.0;
            }
            let target = anchor_denominator * (task.anchor_weight() / w);
            let g = 1.0 + der.r_line / der.r_load;
            (der.weight_denominator(0.0) - target) / g
        })
        .collect();
    delta_r.push(0.0);

    let mut program = ControlProgram::zero(grid);
    program.delta_r.clone_from(&delta_r);
    let report = validate(grid, &program);
    if let Some(v) = report.violations.first() {
        let node = match v {
            Violation::LambdaNearZero { index, .. }
            | Violation::DenominatorNearZero { index, .. }
            | Violation::Parameter { index, .. }
            | Violation::NonFinite { index, .. } => index + 1,
            _ => 0,
        };
        return Err(Error::Compile {
            node,
            reason: report.to_string(),
        });
    }
    Ok(delta_r)
}

/// Secondary reference offsets `V_sec,k = -ΔR_k · i_k⁰` that keep the
/// unloaded-by-data power flow equal to the unprogrammed baseline `i⁰`.
pub fn compile_secondary_offsets(
    grid: &GridSpec,
    delta_r: &[f64],
    settings: &SolveSettings,
) -> Result<Vec<f64>> {
    let baseline = solve_nodal(grid, &ControlProgram::zero(grid), settings)?;
    if delta_r.len() != grid.n_ders() {
        return Err(Error::InvalidTask(format!(
            "{} droop offsets for {} DERs",
            delta_r.len(),
            grid.n_ders()
        )));
    }
    Ok(delta_r
        .iter()
        .zip(&baseline.i)
        .map(|(dr, i0)| if *dr == 0.0 { 0.0 } else { -dr * i0 })
        .collect())
}

/// Droop and secondary offsets for `task`, with every input at zero.
pub fn compile_program(
    grid: &GridSpec,
    task: &WeightTask,
    settings: &SolveSettings,
) -> Result<ControlProgram> {
    let delta_r = compile_droop_offsets(grid, task)?;
    let v_sec = compile_secondary_offsets(grid, &delta_r, settings)?;
    Ok(ControlProgram {
        delta_r,
        v_sec,
        dv_ref: vec![0.0; grid.n_upstream()],
    })
}

/// `∂i_out / ∂V_ref,k` for upstream position `k`, including the virtual
/// admittance of the droop gains:
///
/// ```text
/// (1 / d_k) · [1 + Σ λ_j/d_j · d_5/λ_5]⁻¹
/// ```
pub fn equivalent_admittance(grid: &GridSpec, program: &ControlProgram, k: usize) -> Result<f64> {
    if k >= grid.n_upstream() {
        return Err(Error::InvalidTask(format!(
            "upstream index {} is outside 1..={}",
            k + 1,
            grid.n_upstream()
        )));
    }
    let terms = StarTerms::new(grid, program)?;
    Ok(1.0 / terms.denominators[k] / terms.output_scaling)
}

/// Downstream current response to a unit step on each upstream reference.
fn unit_responses(
    grid: &GridSpec,
    program: &ControlProgram,
    settings: &SolveSettings,
) -> Result<Vec<f64>> {
    let n = grid.n_upstream();
    let d = grid.downstream_index();
    (0..n)
        .map(|k| {
            let mut step = vec![0.0; n];
            step[k] = 1.0;
            Ok(delta_currents(grid, &program.with_inputs(step), settings)?[d])
        })
        .collect()
}

/// Probes each input with a 1 V step and reports the realised weights,
/// scaled so the anchor's weight equals `anchor_weight`.
pub fn measure_effective_weights(
    grid: &GridSpec,
    program: &ControlProgram,
    anchor: usize,
    anchor_weight: f64,
    settings: &SolveSettings,
) -> Result<Vec<f64>> {
    let responses = unit_responses(grid, program, settings)?;
    let reference = *responses.get(anchor).ok_or_else(|| {
        Error::Calibration(format!("anchor {} is not an upstream DER", anchor + 1))
    })?;
    if reference == 0.0 || !reference.is_finite() {
        return Err(Error::Calibration(format!(
            "anchor {} has no downstream response",
            anchor + 1
        )));
    }
    Ok(responses
        .iter()
        .map(|r| r / reference * anchor_weight)
        .collect())
}

/// Measures the downstream response per unit weight at the task's anchor.
pub fn calibrate(
    grid: &GridSpec,
    program: &ControlProgram,
    task: &WeightTask,
    settings: &SolveSettings,
) -> Result<Calibration> {
    task.check(Some(grid.n_upstream()))?;
    let d = grid.downstream_index();
    let mut step = vec![0.0; grid.n_upstream()];
    step[task.anchor] = 1.0;
    let response = delta_currents(grid, &program.with_inputs(step), settings)?[d];
    let kappa = response / task.anchor_weight();
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::Calibration(format!(
            "anchor {} has no downstream response",
            task.anchor + 1
        )));
    }
    Ok(Calibration {
        kappa,
        anchor: task.anchor,
    })
}
