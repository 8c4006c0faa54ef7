use std::fs;
use std::process::{Command, Output};

use smcm::experiments::{ScalingResult, TimeSeries};

fn smcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smcm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn run_writes_time_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("det.csv");
    let out = smcm(&["run", "--mode", "deterministic", "--t-end", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time_h,sigma_cs,sigma_c,sigma_d,sigma_s\n"));
    let series = TimeSeries::read_csv(text.as_bytes()).unwrap();
    assert_eq!(series.len(), 51);
}

#[test]
fn run_to_stdout_is_reproducible() {
    let args = ["run", "--mode", "mc", "--sites", "200", "--t-end", "3", "--seed", "4"];
    let a = smcm(&args);
    let b = smcm(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# reference run\nmode = quantum\nshots = exact\nt_end = 2\ndt = 0.5\n",
    )
    .unwrap();
    let from_file = smcm(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&from_file), 0, "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(TimeSeries::read_csv(from_file.stdout.as_slice()).unwrap().len(), 5);

    let overridden = smcm(&["run", "--config", cfg.to_str().unwrap(), "--dt", "0.1"]);
    assert_eq!(code(&overridden), 0);
    assert_eq!(TimeSeries::read_csv(overridden.stdout.as_slice()).unwrap().len(), 21);
}

#[test]
fn scan_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let mc = dir.path().join("mc.csv");
    let q = dir.path().join("q.csv");
    let common = ["--t-end", "30", "--spinup", "10", "--repeats", "2"];

    let mut args = vec!["scan", "--mode", "montecarlo", "--values", "50,200,800", "--out", mc.to_str().unwrap()];
    args.extend(common);
    let out = smcm(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&mc).unwrap();
    assert!(text.starts_with("n,rms_mean,rms_std,repeats\n"));
    assert_eq!(ScalingResult::read_csv(text.as_bytes()).unwrap().points.len(), 3);

    let mut args = vec!["scan", "--mode", "quantum", "--values", "1000,10000", "--out", q.to_str().unwrap()];
    args.extend(common);
    assert_eq!(code(&smcm(&args)), 0);

    let out = smcm(&["report", "--mc", mc.to_str().unwrap(), "--quantum", q.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("montecarlo exponent"));
    assert!(stdout.contains("shot gap C_Q/C_MC"));
}

#[test]
fn bad_configuration_exits_with_two() {
    assert_eq!(code(&smcm(&["run", "--mode", "annealing"])), 2);
    assert_eq!(code(&smcm(&["run", "--dt", "-1"])), 2);
    assert_eq!(code(&smcm(&["run", "--cape", "-0.5"])), 2);
    assert_eq!(code(&smcm(&["run", "--config", "/nonexistent/smcm.cfg"])), 2);
    assert_eq!(code(&smcm(&["scan", "--mode", "deterministic"])), 2);
    assert_eq!(code(&smcm(&["bogus"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "sites = many\n").unwrap();
    assert_eq!(code(&smcm(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn oversized_step_exits_with_two() {
    let out = smcm(&["run", "--dt", "5", "--t-end", "10"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn starved_postselection_exits_with_four() {
    let out = smcm(&["run", "--mode", "quantum", "--shots", "1", "--seed", "1"]);
    assert_eq!(code(&out), 4);
}
