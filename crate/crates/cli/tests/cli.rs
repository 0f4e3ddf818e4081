use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridcompute"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn verify_passes_on_canonical_config() {
    let canonical = config("canonical.json");
    let out = run(&["verify", "--config", canonical.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
    assert!(text.contains("8/8 checks passed"));
}

#[test]
fn run_decodes_single_image() {
    let canonical = config("canonical.json");
    let out = run(&[
        "run",
        "--config",
        canonical.to_str().unwrap(),
        "--input",
        "0010",
        "--direction",
        "cw",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let case: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(case["decoded"], 8);
    assert_eq!(case["expected"], 8);
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let canonical = config("canonical.json");
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = run(&[
            "sweep",
            "--config",
            canonical.to_str().unwrap(),
            "--direction",
            "both",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn sweep_json_parses() {
    let canonical = config("canonical.json");
    let out = run(&[
        "sweep",
        "--config",
        canonical.to_str().unwrap(),
        "--direction",
        "ccw",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let reports = gridcompute::harness::parse_json(&stdout(&out)).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].cases.len(), 16);
}

#[test]
fn taskless_config_sweeps_to_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.json");
    let mut config = gridcompute::harness::Config::canonical();
    config.task = None;
    std::fs::write(&path, config.to_json()).unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        format!("{}\n", gridcompute::harness::emit::CSV_HEADER)
    );
}

#[test]
fn rounded_offsets_config_still_computes() {
    let rounded = config("clockwise_rounded_offsets.json");
    let out = run(&["sweep", "--config", rounded.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn compile_with_explicit_weights() {
    let canonical = config("canonical.json");
    let out = run(&[
        "compile",
        "--config",
        canonical.to_str().unwrap(),
        "--weights",
        "2,8,1,4",
        "--anchor",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let dr: Vec<f64> = serde_json::from_value(v["delta_r"].clone()).unwrap();
    assert!((dr[0] - 0.2034).abs() < 5e-4);
    assert_eq!(dr[2], 0.0);
}

#[test]
fn solve_reports_operating_point() {
    let canonical = config("canonical.json");
    let out = run(&[
        "solve",
        "--config",
        canonical.to_str().unwrap(),
        "--input",
        "1111",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["delta_i"].as_array().unwrap().len(), 5);
    assert!(v["operating_point"]["v_pcc"].as_f64().unwrap() > 315.0);
}

#[test]
fn mismatched_program_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut config = gridcompute::harness::Config::canonical();
    config.overrides = Some(gridcompute::harness::Overrides {
        delta_r: Some(vec![0.0; 5]),
        v_sec: None,
    });
    std::fs::write(&path, config.to_json()).unwrap();
    let out = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--direction",
        "cw",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_exits_with_two() {
    let canonical = config("canonical.json");
    let c = canonical.to_str().unwrap();
    assert_eq!(
        run(&[
            "run",
            "--config",
            "missing.json",
            "--input",
            "0001",
            "--direction",
            "cw"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["run", "--config", c, "--input", "01", "--direction", "cw"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["run", "--config", c, "--input", "0001", "--direction", "up"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "--config", c, "--tolerance", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["compile", "--config", c]).status.code(), Some(0));
}
