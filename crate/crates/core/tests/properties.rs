mod common;

use common::{reference_solve, rel_gap};
use gridcompute::harness::sampling::{random_grid, random_program, random_valid_case};
use gridcompute::harness::Config;
use gridcompute::{
    canonical_grid, compile_program, compile_secondary_offsets, delta_currents,
    measure_effective_weights, solve_nodal, validate, ControlProgram, Direction, GridSpec,
    RotationTask, SolveSettings, WeightTask,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn settings() -> SolveSettings {
    SolveSettings::default()
}

fn valid_case() -> impl Strategy<Value = (GridSpec, ControlProgram)> {
    any::<u64>().prop_map(|seed| random_valid_case(&mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn validate_is_total(seed in any::<u64>(), extra in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 1 + (seed % 6) as usize);
        let mut program = random_program(&mut rng, &grid);
        program.dv_ref.extend(std::iter::repeat_n(1.0, extra));
        let report = validate(&grid, &program);
        prop_assert_eq!(report.is_ok(), report.violations.is_empty());
    }

    #[test]
    fn solutions_satisfy_circuit_laws((grid, program) in valid_case()) {
        let point = solve_nodal(&grid, &program, &settings()).unwrap();
        prop_assert!(point.residuals(&grid, &program).max() <= 1e-9);
        let reference = reference_solve(&grid, &program);
        for (a, b) in point.i.iter().zip(&reference.i) {
            prop_assert!(rel_gap(*a, *b) < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn response_is_linear_in_inputs(
        (grid, program) in valid_case(),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let other = random_program(&mut rng, &grid).dv_ref;
        let x = &program.dv_ref;
        let mix: Vec<f64> = x.iter().zip(&other).map(|(a, b)| alpha * a + beta * b).collect();
        let dx = delta_currents(&grid, &program.with_inputs(x.clone()), &settings()).unwrap();
        let dy = delta_currents(&grid, &program.with_inputs(other), &settings()).unwrap();
        let dm = delta_currents(&grid, &program.with_inputs(mix), &settings()).unwrap();
        for k in 0..dm.len() {
            let want = alpha * dx[k] + beta * dy[k];
            prop_assert!((dm[k] - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", dm[k], want);
        }
    }

    #[test]
    fn secondary_offsets_preserve_baseline((grid, program) in valid_case()) {
        let baseline = solve_nodal(&grid, &ControlProgram::zero(&grid), &settings()).unwrap();
        let v_sec = compile_secondary_offsets(&grid, &program.delta_r, &settings()).unwrap();
        let programmed = ControlProgram {
            delta_r: program.delta_r.clone(),
            v_sec,
            dv_ref: vec![0.0; grid.n_upstream()],
        };
        let point = solve_nodal(&grid, &programmed, &settings()).unwrap();
        for (a, b) in point.i.iter().zip(&baseline.i) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn anchor_choice_does_not_change_normalized_weights(
        weights in proptest::collection::vec(0.2f64..5.0, 4),
        a in 0usize..4,
        b in 0usize..4,
    ) {
        let grid = canonical_grid();
        let measure = |anchor| {
            let task = WeightTask::new(weights.clone(), anchor).unwrap();
            let program = compile_program(&grid, &task, &settings()).ok()?;
            measure_effective_weights(&grid, &program, 0, weights[0], &settings()).ok()
        };
        if let (Some(wa), Some(wb)) = (measure(a), measure(b)) {
            for (x, y) in wa.iter().zip(&wb) {
                prop_assert!((x - y).abs() <= 1e-9 * y.abs(), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn compiled_offsets_keep_anchor_and_downstream_at_zero(
        weights in proptest::collection::vec(0.2f64..5.0, 4),
        anchor in 0usize..4,
    ) {
        let task = WeightTask::new(weights, anchor).unwrap();
        if let Ok(dr) = gridcompute::compile_droop_offsets(&canonical_grid(), &task) {
            prop_assert_eq!(dr[anchor], 0.0);
            prop_assert_eq!(dr[4], 0.0);
        }
    }
}

#[test]
fn every_valid_random_program_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let (grid, program) = random_valid_case(&mut rng);
        solve_nodal(&grid, &program, &settings()).unwrap();
    }
}

#[test]
fn rounded_reference_offsets_still_realise_the_weights() {
    let grid = canonical_grid();
    let delta_r = vec![0.4688, 0.0, 0.6748, -0.2647, 0.0];
    let v_sec = compile_secondary_offsets(&grid, &delta_r, &settings()).unwrap();
    let program = ControlProgram {
        delta_r,
        v_sec,
        dv_ref: vec![0.0; 4],
    };
    let measured = measure_effective_weights(&grid, &program, 1, 1.0, &settings()).unwrap();
    for (m, w) in measured.iter().zip([4.0, 1.0, 8.0, 2.0]) {
        assert!((m - w).abs() <= 2e-3 * w, "{measured:?}");
    }
}

#[test]
fn decoded_value_is_monotone_in_weighted_sum() {
    let config = Config::canonical();
    for direction in Direction::ALL {
        let task = RotationTask::new(direction);
        let report = gridcompute::harness::sweep(&config, direction, &settings()).unwrap();
        let mut pairs: Vec<(u8, i64)> = report
            .cases
            .iter()
            .map(|c| (task.weighted_sum(&c.image), c.decoded))
            .collect();
        pairs.sort();
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

#[test]
fn delta_on_clockwise_one_hot_matches_reference() {
    // frozen from a 40-digit solve
    let grid = canonical_grid();
    let program = compile_program(
        &grid,
        &RotationTask::new(Direction::Clockwise).weight_task(),
        &settings(),
    )
    .unwrap()
    .with_inputs(vec![1.0, 0.0, 0.0, 0.0]);
    let di = delta_currents(&grid, &program, &settings()).unwrap();
    let want = [
        7.682835796,
        -0.6640269241,
        -5.312215392,
        -1.328053848,
        -0.3647045567,
    ];
    for (a, b) in di.iter().zip(want) {
        assert!((a - b).abs() < 1e-8, "{di:?}");
    }
}
