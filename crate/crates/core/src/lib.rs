//! Steady-state simulation of a droop-controlled DC microgrid programmed to
//! compute.
//!
//! Upstream DERs take data as steps on their voltage references; the
//! resistive star network plus linear droop laws turn those steps into a
//! weighted sum that appears as a change in the downstream DER's current.
//! Reprogramming the droop gains changes the weights, and secondary
//! reference offsets keep the idle power flow where it was.
//!
//! - [`grid`]: grid, program and operating-point types.
//! - [`steady_state`]: nodal and closed-form solvers.
//! - [`compiler`]: weights to droop/secondary offsets, and back.
//! - [`codec`]: 2×2 images in, integers out.
//! - [`harness`]: configuration, sweeps, verification and result files.

pub mod codec;
pub mod compiler;
mod error;
pub mod grid;
pub mod harness;
pub mod steady_state;

pub use codec::{decode, digital_oracle, encode, Decoded, Direction, Image2x2, RotationTask};
pub use compiler::{
    calibrate, compile_droop_offsets, compile_program, compile_secondary_offsets,
    equivalent_admittance, measure_effective_weights, Calibration, WeightTask,
};
pub use error::{Error, Result};
pub use grid::{
    canonical_grid, validate, ControlProgram, DerSpec, GridSpec, OperatingPoint, Residuals,
    ValidationReport, Violation,
};
pub use steady_state::{
    closed_form_downstream, delta_currents, lambda_of, solve_nodal, DownstreamCurrents,
    SolveSettings,
};
