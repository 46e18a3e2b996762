use std::path::Path;
use std::process::{Command, Output};

fn schouten(args: &[&str], dir: &Path, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_schouten"));
    cmd.args(args).current_dir(dir).env_remove("SCHOUTEN_SEED");
    if let Some(s) = seed {
        cmd.env("SCHOUTEN_SEED", s);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "checks = [\"bounds\", \"flow\", \"volume\"]\n[soliton]\nn = 4\nk = 2\nlambda = 0.5\n[numerics]\nsamples = 50\nmc_samples = 50000\n";

#[test]
fn run_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = schouten(&["run", &cfg, "--out", "o"], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("o/report.json")).unwrap();
    assert!(report.contains("\"bounds.pointwise\""));
    let csv = std::fs::read_to_string(dir.path().join("o/series/b_curve.csv")).unwrap();
    assert!(csv.starts_with("s,b,b_prime,residual\n"));

    let out = schouten(&["run", &cfg, "--out", "j", "--format", "json"], dir.path(), None);
    assert!(out.status.success());
    assert!(dir.path().join("j/series/b_curve.json").exists());
}

#[test]
fn seeds_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("report.json")).unwrap();
    assert!(schouten(&["run", &cfg, "--out", "a"], dir.path(), Some("7")).status.success());
    assert!(schouten(&["run", &cfg, "--out", "b"], dir.path(), Some("7")).status.success());
    assert!(schouten(&["run", &cfg, "--out", "c", "--seed", "7"], dir.path(), Some("8")).status.success());
    assert!(schouten(&["run", &cfg, "--out", "d"], dir.path(), None).status.success());
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
    assert_ne!(read("a"), read("d"));
    let report = String::from_utf8(read("a")).unwrap();
    assert!(report.contains("\"seed\": 7"));
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[soliton]\nn = 3\nk = 1\nlambda = 1.0\n");
    let out = schouten(&["run", &cfg], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k = 1"));
    let out = schouten(&["run", "missing.toml"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));
}

#[test]
fn example_config_runs_and_checks_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let example = schouten(&["example-config"], dir.path(), None);
    assert!(example.status.success());
    let text = String::from_utf8(example.stdout).unwrap();
    assert!(text.contains("[numerics]"));
    let list = String::from_utf8(schouten(&["list-checks"], dir.path(), None).stdout).unwrap();
    for name in ["residuals", "identities", "ode", "flow", "bounds", "growth", "volume"] {
        assert!(list.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
