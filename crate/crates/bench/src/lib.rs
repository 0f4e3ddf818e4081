//! Shared fixtures for the benchmarks.

use gridcompute::{
    canonical_grid, compile_program, ControlProgram, GridSpec, RotationTask, SolveSettings,
};

/// The canonical grid programmed for `direction` with every pixel set.
pub fn programmed_canonical(direction: gridcompute::Direction) -> (GridSpec, ControlProgram) {
    let grid = canonical_grid();
    let task = RotationTask::new(direction).weight_task();
    let program = compile_program(&grid, &task, &SolveSettings::default())
        .expect("canonical task compiles")
        .with_inputs(vec![1.0; 4]);
    (grid, program)
}
