use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn atcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atcrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn const_solve_succeeds_with_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = const(3)\neps_list = 0.2\nmesh_ratio = 2\n");
    let out_dir = dir.path().join("out");
    let out = atcrit(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let csv = fs::read_to_string(out_dir.join("energy.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let e_total: f64 = row[7].parse().unwrap();
    assert!(e_total.abs() <= 1e-12);
    for f in ["state.bin", "diagnostics.json", "fields.vtk"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = const(1)\nepsilonn = 0.1\n");
    let out = atcrit(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("epsilonn"));
}

#[test]
fn crack_with_one_sweep_exits_two_and_still_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = crack(0.1)\neps_list = 0.2\nmesh_ratio = 2\nmax_sweeps = 1\ndiagnostics = none\n",
    );
    let out_dir = dir.path().join("out");
    let out = atcrit(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(out_dir.join("state.bin").exists());
}

#[test]
fn empty_schedule_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = const(1)\neps_list =\n");
    let out = atcrit(&["continuation", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_arguments_exit_one() {
    assert_eq!(atcrit(&["solve"]).status.code(), Some(1));
    assert_eq!(atcrit(&["bogus"]).status.code(), Some(1));
}

#[test]
fn const_continuation_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = const(-2)\neps_list = 0.16, 0.08, 0.04\nmesh_ratio = 2\ndiagnostics = none\n",
    );
    let out_dir = dir.path().join("out");
    let out = atcrit(&[
        "continuation",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("energy.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let e: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
        assert!(e <= 1e-12);
    }
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("stage_2/state.bin").exists());
}

#[test]
fn diagnose_round_trip_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = const(1.5)\neps_list = 0.25\nmesh_ratio = 2\n");
    let out_dir = dir.path().join("out");
    assert_eq!(
        atcrit(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    let state = out_dir.join("state.bin");
    let out = atcrit(&["diagnose", "--state", state.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"e_total\": 0.0"));

    let bytes = fs::read(&state).unwrap();
    let cut = dir.path().join("cut.bin");
    fs::write(&cut, &bytes[..bytes.len() - 100]).unwrap();
    let out = atcrit(&["diagnose", "--state", cut.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(
        msg.contains(&bytes.len().to_string()) && msg.contains(&(bytes.len() - 100).to_string()),
        "{msg}"
    );
}
