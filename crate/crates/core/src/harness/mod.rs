//! Configuration, batch runs, verification and result files.

pub mod config;
pub mod emit;
pub mod run;
pub mod sampling;
pub mod verify;

pub use config::{Config, EncodingConfig, Overrides, TaskChoice, TaskConfig};
pub use emit::{emit, emit_csv, emit_heatmap, emit_json, parse_json, Format};
pub use run::{grid_fingerprint, run_case, sweep, CaseResult, ProgrammedRotation, SweepReport};
pub use verify::{verify_reference, Check, VerificationReport};
