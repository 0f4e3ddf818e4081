use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use gridcompute::harness::{emit, run_case, sweep, verify_reference, Config, Format, TaskChoice};
use gridcompute::{
    compile_secondary_offsets, delta_currents, encode, solve_nodal, ControlProgram, Direction,
    Image2x2, RotationTask, SolveSettings, WeightTask,
};
use serde_json::json;

/// Program a droop-controlled DC microgrid to compute, and check that it does.
#[derive(Debug, Parser)]
#[command(name = "gridcompute", version)]
struct Cli {
    /// Residual tolerance for every steady-state solve.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile target weights into droop and secondary offsets.
    Compile {
        #[arg(long)]
        config: PathBuf,
        /// Rotation direction: cw or ccw.
        #[arg(long)]
        direction: Option<Direction>,
        /// Explicit comma-separated weights; needs --anchor.
        #[arg(long, value_delimiter = ',', requires = "anchor")]
        weights: Option<Vec<f64>>,
        /// One-based node whose droop offset stays at zero.
        #[arg(long, requires = "weights")]
        anchor: Option<usize>,
    },
    /// Solve the configured grid's steady state, optionally with an input image.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Four row-major bits, e.g. 0101.
        #[arg(long)]
        input: Option<Image2x2>,
    },
    /// Push one image through the programmed grid and decode it.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: Image2x2,
        #[arg(long)]
        direction: Direction,
    },
    /// Run all 16 images and write the results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// cw, ccw or both; defaults to the config's task direction.
        #[arg(long)]
        direction: Option<DirectionArg>,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the reference offsets and every computational property.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy)]
enum DirectionArg {
    One(Direction),
    Both,
}

impl std::str::FromStr for DirectionArg {
    type Err = gridcompute::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("both") {
            Ok(DirectionArg::Both)
        } else {
            s.parse().map(DirectionArg::One)
        }
    }
}

/// Failure with the process exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<gridcompute::Error>() {
            Some(e) if !e.is_input_error() => 1,
            _ => 2,
        };
        Failure { code, error }
    }
}

impl From<gridcompute::Error> for Failure {
    fn from(error: gridcompute::Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json prints")
    );
}

fn compile(
    config: &Config,
    direction: Option<Direction>,
    weights: Option<Vec<f64>>,
    anchor: Option<usize>,
    settings: &SolveSettings,
) -> Result<(), Failure> {
    let task = match (weights, anchor, direction) {
        (Some(weights), Some(anchor), _) => {
            let anchor = anchor
                .checked_sub(1)
                .ok_or_else(|| anyhow!("--anchor is one-based"))?;
            WeightTask::new(weights, anchor)?
        }
        (_, _, Some(direction)) => RotationTask::new(direction).weight_task(),
        _ => match config.task_choice()? {
            Some(TaskChoice::Rotation(d)) => RotationTask::new(d).weight_task(),
            Some(TaskChoice::Weights(task)) => task,
            None => return Err(anyhow!("no task: pass --direction or --weights/--anchor").into()),
        },
    };
    let program = config.program_for(&task, settings)?;
    print_json(&json!({
        "weights": task.weights,
        "anchor": task.anchor + 1,
        "delta_r": program.delta_r,
        "v_sec": program.v_sec,
    }));
    Ok(())
}

fn configured_program(
    config: &Config,
    settings: &SolveSettings,
) -> Result<ControlProgram, Failure> {
    let task = match config.task_choice()? {
        Some(TaskChoice::Rotation(d)) => Some(RotationTask::new(d).weight_task()),
        Some(TaskChoice::Weights(task)) => Some(task),
        None => None,
    };
    match task {
        Some(task) => Ok(config.program_for(&task, settings)?),
        None => {
            let mut program = ControlProgram::zero(&config.grid);
            if let Some(overrides) = &config.overrides {
                if let Some(delta_r) = &overrides.delta_r {
                    program.delta_r.clone_from(delta_r);
                    program.v_sec = compile_secondary_offsets(&config.grid, delta_r, settings)?;
                }
                if let Some(v_sec) = &overrides.v_sec {
                    program.v_sec.clone_from(v_sec);
                }
            }
            Ok(program)
        }
    }
}

fn solve(
    config: &Config,
    input: Option<Image2x2>,
    settings: &SolveSettings,
) -> Result<(), Failure> {
    let mut program = configured_program(config, settings)?;
    if let Some(image) = input {
        if config.grid.n_upstream() != 4 {
            return Err(anyhow!("--input needs a grid with 4 upstream DERs").into());
        }
        program = program.with_inputs(encode(&image, config.encoding.amplitude));
    }
    let point = solve_nodal(&config.grid, &program, settings)?;
    let delta_i = delta_currents(&config.grid, &program, settings)?;
    print_json(&json!({
        "program": program,
        "operating_point": point,
        "delta_i": delta_i,
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let settings = SolveSettings::with_tolerance(cli.tolerance)?;
    match cli.command {
        Command::Compile {
            config,
            direction,
            weights,
            anchor,
        } => compile(
            &Config::load(config)?,
            direction,
            weights,
            anchor,
            &settings,
        ),
        Command::Solve { config, input } => solve(&Config::load(config)?, input, &settings),
        Command::Run {
            config,
            input,
            direction,
        } => {
            let case = run_case(&Config::load(config)?, input, direction, &settings)?;
            print_json(&serde_json::to_value(&case).expect("case serializes"));
            if case.is_correct() {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    error: anyhow!("decoded {}, expected {}", case.decoded, case.expected),
                })
            }
        }
        Command::Sweep {
            config,
            direction,
            format,
            out,
        } => {
            let config = Config::load(config)?;
            let directions: Vec<Direction> = match direction {
                Some(DirectionArg::One(d)) => vec![d],
                Some(DirectionArg::Both) => Direction::ALL.to_vec(),
                None => match config.task_choice()? {
                    Some(TaskChoice::Rotation(d)) => vec![d],
                    _ => Vec::new(),
                },
            };
            let reports = directions
                .iter()
                .map(|&d| sweep(&config, d, &settings))
                .collect::<gridcompute::Result<Vec<_>>>()?;
            let text = emit(&reports, format);
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("cannot write {}", path.display()))
                    .map_err(|error| Failure { code: 1, error })?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Verify { config } => {
            let report = verify_reference(&Config::load(config)?, &settings);
            print!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    error: anyhow!("verification failed"),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
