//! End-to-end runs of the `qbm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm")).args(args).output().expect("run qbm")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let out = dir.join("out");
    let path = dir.join("run.conf");
    std::fs::write(&path, format!("{body}\noutput = {}\n", out.display())).unwrap();
    path
}

const SMALL: &str = "mu = 0, 1\nt_end = 5\nsteps_per_period = 200";

#[test]
fn simulate_writes_manifested_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = qbm(&["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["trajectory_mu0_state0", "trajectory_mu1_state0", "coefficients_mu1", "witness_mu0"] {
        let text = std::fs::read_to_string(dir.path().join("out").join(format!("{stem}.csv"))).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# qbm"));
        let rest: Vec<&str> = lines.skip_while(|l| l.starts_with('#')).collect();
        assert!(rest[0].starts_with("t,"));
        assert!(rest.len() > 100);
        assert!(text.contains("# frequency = omega_r"));
    }
    let first = std::fs::read_to_string(dir.path().join("out/trajectory_mu0_state0.csv")).unwrap();
    let row: Vec<f64> = first.lines().find(|l| l.starts_with("0e0")).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 1.0, 0.01, 0.5, 0.5, 0.0]);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let body = "mu = 0.5\nt_end = 5\nsteps_per_period = 200\noutput = out";
    for d in [&a, &b] {
        std::fs::write(d.path().join("run.conf"), body).unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_qbm")).current_dir(d.path()).args(["witness", "run.conf"]).output().unwrap();
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("out/witness_mu0.5.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "colour = blue");
    let o = qbm(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = qbm(&["simulate", dir.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "gamma = -1");
    assert_eq!(qbm(&["witness", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unrelaxed_table_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gamma = 0\ntable1_gamma_s2 = 0\nt_end = 20\ntable1_t_end_s2 = 20\nsteps_per_period = 100");
    let o = qbm(&["table1", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s=1"));
    assert!(dir.path().join("out/table1.csv").exists());
}

#[test]
fn hopeless_calibration_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mu = 1\noracle = true\noracle_modes = 100\noracle_t_end = 20\nt_end = 20\nfrequency = omega_s\nsign = plus\nnoise = auto",
    );
    let o = qbm(&["calibrate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_compare_and_coefficients_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu = 0.5\noracle = true\noracle_modes = 100\noracle_t_end = 10\nt_end = 10");
    let o = qbm(&["oracle-compare", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("relative error"));
    assert!(dir.path().join("out/oracle_mu0.5.csv").exists());
    let o = qbm(&["coefficients", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("out/greens_mu0.5.csv").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            qbm_cli::RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 9);
}
