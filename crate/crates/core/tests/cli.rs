//! Exit codes and output of the `xmhd` binary.

use std::process::{Command, Output};

fn xmhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmhd")).args(args).output().expect("spawn xmhd")
}

const SMALL: [&str; 8] = ["--problem", "khi", "--nx", "8", "--ny", "8", "--tf", "0.002"];

#[test]
fn successful_run_prints_one_row() {
    let out = xmhd(&SMALL);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scenario,case,scheme"));
    assert_eq!(lines[1].split(',').count(), 19);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn bad_arguments_exit_with_2() {
    let mut args = SMALL.to_vec();
    args.extend(["--integrator", "leapfrog"]);
    assert_eq!(xmhd(&args).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.bin");
    let mut args = SMALL.to_vec();
    args.extend(["--sweep", "tol=1e-3", "--reference", missing.to_str().unwrap()]);
    let out = xmhd(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.bin"));
}

#[test]
fn exhausted_budget_exits_with_3_and_leaves_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# tiny budget\nmax-steps = 1\ntf = 0.05\n").unwrap();
    let out_dir = dir.path().join("out");
    let mut args = SMALL.to_vec();
    args.truncate(6);
    args.extend(["--config", cfg.to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    let out = xmhd(&args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("abort.bin").exists());
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "integrator = leapfrog\n").unwrap();
    let mut args = SMALL.to_vec();
    args.extend(["--config", cfg.to_str().unwrap(), "--integrator", "rk43"]);
    let out = xmhd(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains(",rk43,"));
}
