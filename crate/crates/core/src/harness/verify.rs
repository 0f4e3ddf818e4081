//! Reproduces the reference droop and secondary offsets and checks the
//! computational properties of the programmed grid, one entry per check.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{Direction, Image2x2};
use crate::compiler::{
    compile_droop_offsets, compile_program, compile_secondary_offsets, equivalent_admittance,
    measure_effective_weights,
};
use crate::grid::ControlProgram;
use crate::harness::config::Config;
use crate::harness::run::{sweep, ProgrammedRotation};
use crate::harness::sampling::{random_grid, random_task, random_valid_case, MAX_UPSTREAM};
use crate::steady_state::{closed_form_downstream, delta_currents, solve_nodal, SolveSettings};
use crate::Result;

/// Reference droop offsets, rounded to 4 decimals.
pub const REFERENCE_DELTA_R_CW: [f64; 5] = [0.4688, 0.0, 0.6748, -0.2647, 0.0];
pub const REFERENCE_DELTA_R_CCW: [f64; 5] = [0.2034, 0.2969, 0.0, -0.2522, 0.0];
/// Reference secondary offsets, V.
pub const REFERENCE_V_SEC_CW: [f64; 5] = [-1.4897, 0.0, -2.1445, 0.8412, 0.0];
/// Reference counterclockwise magnitudes at nodes 1, 2 and 4.
pub const REFERENCE_V_SEC_CCW_MAGNITUDES: [(usize, f64); 3] =
    [(0, 0.6463), (1, 0.9435), (3, 0.8016)];

pub const DELTA_R_TOL: f64 = 5e-4;
pub const V_SEC_REL_TOL: f64 = 5e-3;
pub const EXACT_TOL: f64 = 1e-9;
pub const RATIO_TOL: f64 = 1e-6;
pub const DECODE_RESIDUAL_TOL: f64 = 1e-6;

pub const DUAL_SOLVER_SAMPLES: usize = 1000;
pub const ADMITTANCE_SAMPLES: usize = 200;
pub const ROUND_TRIP_SAMPLES: usize = 200;
pub const SEED: u64 = 0x5eed_9d1d;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(id: u8, name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            id,
            name,
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    fn failed(id: u8, name: &'static str, tolerance: f64, err: crate::Error) -> Self {
        Self {
            id,
            name,
            passed: false,
            measured: f64::INFINITY,
            tolerance,
            detail: format!("error: {err}"),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}. {}: worst {:.3e} (tol {:.0e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(f, "{check}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

/// Relative gap with an absolute floor of one unit.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Runs every check against the configured grid. Failures are report
/// entries, never errors.
pub fn verify_reference(config: &Config, settings: &SolveSettings) -> VerificationReport {
    type Runner = fn(&Config, &SolveSettings) -> Result<(f64, String)>;
    let checks: [(u8, &str, f64, Runner); 8] = [
        (1, "droop-offset reproduction", DELTA_R_TOL, droop_offsets),
        (
            2,
            "secondary-offset reproduction",
            V_SEC_REL_TOL,
            secondary_offsets,
        ),
        (3, "baseline preservation", EXACT_TOL, baseline_preservation),
        (4, "weight proportionality", RATIO_TOL, proportionality),
        (5, "superposition", EXACT_TOL, superposition),
        (6, "end-to-end computation", DECODE_RESIDUAL_TOL, end_to_end),
        (7, "dual-solver equivalence", EXACT_TOL, dual_solver),
        (8, "compile round-trip", EXACT_TOL, round_trip),
    ];
    VerificationReport {
        checks: checks
            .into_iter()
            .map(|(id, name, tol, run)| match run(config, settings) {
                Ok((measured, detail)) => Check::new(id, name, measured, tol, detail),
                Err(err) => Check::failed(id, name, tol, err),
            })
            .collect(),
    }
}

fn droop_offsets(config: &Config, _: &SolveSettings) -> Result<(f64, String)> {
    let mut worst = 0.0_f64;
    for (direction, reference) in [
        (Direction::Clockwise, REFERENCE_DELTA_R_CW),
        (Direction::Counterclockwise, REFERENCE_DELTA_R_CCW),
    ] {
        let task = crate::codec::RotationTask::new(direction).weight_task();
        let delta_r = compile_droop_offsets(&config.grid, &task)?;
        for (a, b) in delta_r.iter().zip(reference) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst, "absolute, both directions".into()))
}

fn secondary_offsets(config: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let grid = &config.grid;
    let cw = crate::codec::RotationTask::new(Direction::Clockwise).weight_task();
    let cw = compile_secondary_offsets(grid, &compile_droop_offsets(grid, &cw)?, settings)?;
    let ccw = crate::codec::RotationTask::new(Direction::Counterclockwise).weight_task();
    let ccw = compile_secondary_offsets(grid, &compile_droop_offsets(grid, &ccw)?, settings)?;

    let mut worst = 0.0_f64;
    for (a, b) in cw.iter().zip(REFERENCE_V_SEC_CW) {
        worst = worst.max(if b == 0.0 {
            a.abs()
        } else {
            (a - b).abs() / b.abs()
        });
    }
    for (k, magnitude) in REFERENCE_V_SEC_CCW_MAGNITUDES {
        worst = worst.max((ccw[k].abs() - magnitude).abs() / magnitude);
    }
    // the remaining counterclockwise entries are the anchor and downstream bus
    worst = worst.max(ccw[2].abs()).max(ccw[4].abs());
    Ok((worst, "relative per nonzero entry".into()))
}

fn baseline_preservation(config: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let grid = &config.grid;
    let baseline = solve_nodal(grid, &ControlProgram::zero(grid), settings)?;
    let mut worst = 0.0_f64;
    for direction in Direction::ALL {
        let task = crate::codec::RotationTask::new(direction).weight_task();
        let program = compile_program(grid, &task, settings)?;
        let point = solve_nodal(grid, &program, settings)?;
        for (a, b) in point.i.iter().zip(&baseline.i) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    Ok((worst, "relative, every DER, both directions".into()))
}

fn proportionality(config: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let grid = &config.grid;
    let d = grid.downstream_index();
    let mut worst = 0.0_f64;
    for direction in Direction::ALL {
        let programmed = ProgrammedRotation::new(config, direction, settings)?;
        let weights = programmed.task.weights;
        let anchor = programmed.task.anchor;
        let responses = (0..4)
            .map(|k| {
                let mut step = vec![0.0; 4];
                step[k] = 1.0;
                Ok(delta_currents(grid, &programmed.program.with_inputs(step), settings)?[d])
            })
            .collect::<Result<Vec<f64>>>()?;
        for k in 0..4 {
            let ratio = responses[k] / responses[anchor];
            let target = f64::from(weights[k]) / f64::from(weights[anchor]);
            worst = worst.max((ratio - target).abs() / target);
        }
    }
    Ok((worst, "one-hot Δi₅ ratios vs weights".into()))
}

fn superposition(config: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let mut worst = 0.0_f64;
    for direction in Direction::ALL {
        worst = worst.max(sweep(config, direction, settings)?.superposition_deviation);
    }
    Ok((worst, "16 images × 2 directions".into()))
}

fn end_to_end(config: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let mut correct = 0;
    let mut worst = 0.0_f64;
    for direction in Direction::ALL {
        let programmed = ProgrammedRotation::new(config, direction, settings)?;
        for image in Image2x2::all() {
            let case =
                programmed.evaluate(&config.grid, image, config.encoding.amplitude, settings)?;
            if case.is_correct() {
                correct += 1;
                worst = worst.max(case.residual);
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    Ok((worst, format!("{correct}/32 decoded correctly")))
}

fn dual_solver(_: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    for _ in 0..DUAL_SOLVER_SAMPLES {
        let (grid, program) = random_valid_case(&mut rng);
        let nodal = solve_nodal(&grid, &program, settings)?;
        let closed = closed_form_downstream(&grid, &program)?;
        worst = worst
            .max(rel_gap(closed.i_out_down, nodal.i_out_down))
            .max(rel_gap(closed.i_down, nodal.i[grid.downstream_index()]));
    }
    let mut admittance = 0.0_f64;
    for _ in 0..ADMITTANCE_SAMPLES {
        let (grid, program) = random_valid_case(&mut rng);
        let rest = program.without_inputs();
        let base = solve_nodal(&grid, &rest, settings)?.i_out_down;
        for k in 0..grid.n_upstream() {
            let mut step = vec![0.0; grid.n_upstream()];
            step[k] = 1.0;
            let probe = solve_nodal(&grid, &rest.with_inputs(step), settings)?.i_out_down - base;
            admittance = admittance.max(rel_gap(equivalent_admittance(&grid, &program, k)?, probe));
        }
    }
    Ok((
        worst.max(admittance),
        format!(
            "closed form {worst:.1e} over {DUAL_SOLVER_SAMPLES}, admittance {admittance:.1e} over {ADMITTANCE_SAMPLES}"
        ),
    ))
}

fn round_trip(_: &Config, settings: &SolveSettings) -> Result<(f64, String)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xc0de);
    let mut worst = 0.0_f64;
    let mut done = 0;
    while done < ROUND_TRIP_SAMPLES {
        let n = rng.random_range(1..=MAX_UPSTREAM);
        let grid = random_grid(&mut rng, n);
        let task = random_task(&mut rng, n);
        // grids whose compiled offsets are singular are not valid samples
        let Ok(program) = compile_program(&grid, &task, settings) else {
            continue;
        };
        let measured = measure_effective_weights(
            &grid,
            &program,
            task.anchor,
            task.anchor_weight(),
            settings,
        )?;
        for (m, w) in measured.iter().zip(&task.weights) {
            worst = worst.max((m - w).abs() / w);
        }
        done += 1;
    }
    Ok((worst, format!("{ROUND_TRIP_SAMPLES} random weight vectors")))
}
