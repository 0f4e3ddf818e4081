//! Seeded generators for randomized grids, programs and weight tasks.

use rand::Rng;

use crate::compiler::WeightTask;
use crate::grid::{validate, ControlProgram, DerSpec, GridSpec};

/// Largest number of upstream DERs a random grid gets.
pub const MAX_UPSTREAM: usize = 6;

pub fn random_der<R: Rng + ?Sized>(rng: &mut R) -> DerSpec {
    DerSpec {
        v_ref: rng.random_range(300.0..330.0),
        r_droop: rng.random_range(0.0..0.5),
        r_line: rng.random_range(0.01..2.0),
        r_load: rng.random_range(10.0..1000.0),
    }
}

pub fn random_grid<R: Rng + ?Sized>(rng: &mut R, n_upstream: usize) -> GridSpec {
    let upstream = (0..n_upstream).map(|_| random_der(rng)).collect();
    GridSpec::new(upstream, random_der(rng))
}

/// Offsets with effective droop `R_d + ΔR` in [-0.5, 1] Ω, secondary
/// offsets in [-5, 5] V and input steps in [-2, 2] V.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, grid: &GridSpec) -> ControlProgram {
    let delta_r = grid
        .ders()
        .map(|der| rng.random_range(-0.5..1.0) - der.r_droop)
        .collect();
    let v_sec = grid.ders().map(|_| rng.random_range(-5.0..5.0)).collect();
    let dv_ref = grid
        .upstream
        .iter()
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    ControlProgram {
        delta_r,
        v_sec,
        dv_ref,
    }
}

/// Draws grid/program pairs until one passes validation.
pub fn random_valid_case<R: Rng + ?Sized>(rng: &mut R) -> (GridSpec, ControlProgram) {
    loop {
        let n = rng.random_range(1..=MAX_UPSTREAM);
        let grid = random_grid(rng, n);
        let program = random_program(rng, &grid);
        if validate(&grid, &program).is_ok() {
            return (grid, program);
        }
    }
}

/// Weights in [0.1, 10] with a random anchor.
pub fn random_task<R: Rng + ?Sized>(rng: &mut R, n_upstream: usize) -> WeightTask {
    WeightTask {
        weights: (0..n_upstream)
            .map(|_| rng.random_range(0.1..10.0))
            .collect(),
        anchor: rng.random_range(0..n_upstream),
    }
}
