//! End-to-end tests of the `hedra` binary: exit codes, file round trips,
//! and the documented behavior of each subcommand.

use std::path::Path;
use std::process::{Command, Output};

use hedra::io;
use hedra::structure::{build_hedra, connectivity, TetraParams};

fn hedra_in(dir: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hedra"));
    cmd.current_dir(dir);
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should run")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn build_writes_a_model_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("8 nodes, 21 members"));

    let file = io::read_model(&dir.path().join("model.json")).unwrap();
    let reread = file.model().unwrap();
    let reference = build_hedra(2, &TetraParams::default(), 0.02, 3).unwrap();
    assert_eq!(
        connectivity(&reread).entries(),
        connectivity(&reference).entries()
    );
    assert_eq!(file.manifest.command, "hedra build --modules 2");
}

#[test]
fn build_rejects_zero_modules() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(hedra_in(dir.path()).args(["build", "--modules", "0"]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn a_single_module_has_no_joint_cables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(hedra_in(dir.path()).args(["build", "--modules", "1"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let model = io::read_model(&dir.path().join("model.json"))
        .unwrap()
        .model()
        .unwrap();
    assert_eq!(model.cable_count(), 0);
    assert_eq!(model.bar_count(), 6);
}

#[test]
fn free_densities_without_loads_solve_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let out = run(hedra_in(dir.path()).args(["ik", "--qmin", "0", "--no-gravity"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("residual:"));
    assert!(text.contains("objective:"));

    let solution = io::read_solution(&dir.path().join("solution.json")).unwrap();
    for q in &solution.q {
        assert!(q.abs() <= 1e-12, "density {q} should be zero");
    }
    assert!(solution.objective.abs() <= 1e-20);
}

#[test]
fn default_solve_keeps_every_cable_at_the_density_floor() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build"]));
    let out = run(hedra_in(dir.path()).args(["ik"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let solution = io::read_solution(&dir.path().join("solution.json")).unwrap();
    let model = io::read_model(&dir.path().join("model.json"))
        .unwrap()
        .model()
        .unwrap();
    for q in &solution.q[..model.cable_count()] {
        assert!(*q >= 500.0 - 1e-9, "cable density {q} below the floor");
    }
}

#[test]
fn unreachable_bends_exit_as_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let out = run(hedra_in(dir.path()).args(["ik", "--bend", "90"]));
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("pose not statically feasible"));
}

#[test]
fn missing_model_exits_with_the_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(hedra_in(dir.path()).args(["ik", "--model", "missing.json"]));
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

#[test]
fn conflicting_flags_exit_with_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let out = run(hedra_in(dir.path()).args(["ik", "--bend", "10", "--twist", "10"]));
    assert_eq!(out.status.code(), Some(2));

    let out = run(hedra_in(dir.path()).args([
        "traj", "--mode", "bend", "--ratio", "0.5", "--steps", "2",
    ]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("--ratio"));

    let out = run(hedra_in(dir.path()).args(["traj", "--mode", "contract", "--steps", "2"]));
    assert_eq!(out.status.code(), Some(2));

    let out = run(hedra_in(dir.path()).args(["ik", "--payload-node", "5"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contraction_trajectories_stay_on_axis() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build"]));
    let out = run(hedra_in(dir.path()).args([
        "traj", "--mode", "contract", "--ratio", "0.8", "--steps", "10",
    ]));
    assert!(out.status.success(), "{}", stderr(&out));

    let (header, rows) = csv_rows(&dir.path().join("trace.csv"));
    assert_eq!(
        header,
        ["step", "x", "y", "z", "bend_deg", "twist_deg", "cable1_m", "cable2_m", "cable3_m"]
    );
    assert_eq!(rows.len(), 10);
    let stack_height = 4.0 * 0.13 + 0.15;
    for row in &rows {
        assert!(row[1].abs() <= 0.01 * stack_height);
        assert!(row[2].abs() <= 0.01 * stack_height);
    }
    let (_, actuation) = csv_rows(&dir.path().join("actuation.csv"));
    assert_eq!(actuation.len(), 30);
    assert_eq!(actuation[0][0], 1.0);
    assert_eq!(actuation[0][1], 1.0);
}

#[test]
fn a_single_zero_angle_step_is_one_identity_row() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build"]));
    let out = run(hedra_in(dir.path()).args([
        "traj", "--mode", "bend", "--steps", "1", "--angle", "0",
    ]));
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = csv_rows(&dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 1.0);
    assert!(rows[0][4].abs() < 1e-5, "bend {} not zero", rows[0][4]);
    assert!((rows[0][3] - 0.67).abs() < 1e-9, "z {}", rows[0][3]);
}

#[test]
fn validated_trajectories_append_the_error_column() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let out = run(hedra_in(dir.path()).args([
        "traj", "--mode", "bend", "--angle", "15", "--steps", "3", "--validate",
    ]));
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_rows(&dir.path().join("trace.csv"));
    assert_eq!(header.last().unwrap(), "relax_err_m");
    for row in &rows {
        let err = *row.last().unwrap();
        assert!(err >= 0.0 && err < 0.004, "relaxation error {err} too large");
    }
}

#[test]
fn relax_reproduces_the_solved_pose() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    run(hedra_in(dir.path()).args(["ik", "--bend", "15"]));
    let out = run(hedra_in(dir.path()).args(["relax"]));
    assert!(out.status.success(), "{}", stderr(&out));

    let file = io::read_relax(&dir.path().join("relaxed.json")).unwrap();
    assert!(file.iterations > 0);
    assert!(file.min_cable_force >= 0.0);
    let worst: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("worst node error: "))
        .unwrap()
        .parse()
        .unwrap();
    // 2% of the two-module stack height.
    assert!(worst < 0.02 * 0.28, "worst node error {worst}");
}

#[test]
fn export_counts_match_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let out = run(hedra_in(dir.path()).args(["export"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("stack.obj")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 8);
    assert_eq!(text.lines().filter(|l| l.starts_with("l ")).count(), 21);

    run(hedra_in(dir.path()).args(["build", "--modules", "1", "--output", "one.json"]));
    let out = run(hedra_in(dir.path()).args([
        "export", "--model", "one.json", "--output", "one.obj",
    ]));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("one.obj")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.starts_with("l ")).count(), 6);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let run_pipeline = |dir: &Path| {
        for args in [
            vec!["build", "--modules", "3"],
            vec!["ik", "--bend", "20"],
            vec!["traj", "--mode", "bend", "--angle", "30", "--steps", "4"],
            vec!["export"],
        ] {
            let out = run(hedra_in(dir)
                .args(&args)
                .env("SOURCE_DATE_EPOCH", "1700000000"));
            assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        }
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    for name in [
        "model.json",
        "solution.json",
        "trace.csv",
        "trace.csv.manifest.json",
        "actuation.csv",
        "actuation.csv.manifest.json",
        "stack.obj",
    ] {
        let bytes_a = std::fs::read(a.path().join(name)).unwrap();
        let bytes_b = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
    // The requested epoch reached the manifest.
    let manifest = std::fs::read_to_string(a.path().join("trace.csv.manifest.json")).unwrap();
    assert!(manifest.contains("2023-11-14T22:13:20Z"));
}

#[test]
fn log_level_controls_stderr_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    run(hedra_in(dir.path()).args(["build", "--modules", "2"]));
    let quiet = run(hedra_in(dir.path()).args(["ik"]));
    assert!(stderr(&quiet).is_empty(), "{}", stderr(&quiet));
    let chatty = run(hedra_in(dir.path()).args(["ik"]).env("HEDRA_LOG", "info"));
    assert!(stderr(&chatty).contains("loaded"));
}
