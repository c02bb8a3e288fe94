use std::path::Path;
use std::process::{Command, Output};

use mixkpp::cli_io::output::RunManifest;
use mixkpp::report::Report;

fn mixkpp(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mixkpp"));
    cmd.arg("--quiet").arg("--out-dir").arg(dir).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn kernel_run_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = mixkpp(dir.path(), &["kernel", "--n", "2048", "--half-width", "128", "--t", "2", "--kind", "fractional"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    for key in ["\"name\"", "\"stat\"", "\"tol\"", "\"pass\""] {
        assert!(text.contains(key), "{key} missing");
    }
    assert!(std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap().starts_with("kind,t,x,value\n"));
    let manifest = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), 2);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // t = 0.1 is far below the lattice resolution of dx = 0.5.
    let out = mixkpp(
        dir.path(),
        &["kernel", "--n", "256", "--half-width", "64", "--t", "0.1", "--kind", "fractional", "--check", "oracle"],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!report(dir.path()).passed());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[operator]\ns = 0.5\ngamma = 1.5\n").unwrap();
    let out = mixkpp(dir.path(), &["--config", cfg.to_str().unwrap(), "verify"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma must be < 2s"));
    let out = mixkpp(dir.path(), &["evolve"], &[("MIXKPP_GRID_POINTS", "8")]);
    assert_eq!(out.status.code(), Some(2));
    let out = mixkpp(dir.path(), &["spread", "--fit-window", "8"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_environment_which_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[grid]\nn = 512\nL = 64\n[solver]\nt_end = 0.5\n").unwrap();
    let env = [("MIXKPP_GRID_N", "1024"), ("MIXKPP_OPERATOR_S", "0.25")];
    let out = mixkpp(dir.path(), &["--config", cfg.to_str().unwrap(), "kernel", "--s", "0.75", "--t", "2", "--check", "mass"], &env);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.config["grid"]["n"], 1024);
    assert_eq!(manifest.config["grid"]["L"], 64.0);
    assert_eq!(manifest.config["operator"]["s"], 0.75);
}

#[test]
fn evolve_is_reproducible_from_the_manifest_echo() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let env = [("MIXKPP_GRID_N", "1024"), ("MIXKPP_GRID_L", "512"), ("MIXKPP_SOLVER_T_END", "1")];
    assert_eq!(mixkpp(&a, &["evolve"], &env).status.code(), Some(0));
    let first = RunManifest::read(&a.join("manifest.json")).unwrap();
    let echo: mixkpp::cli_io::config::RunConfig = serde_json::from_value(first.config.clone()).unwrap();
    let cfg = dir.path().join("echo.toml");
    std::fs::write(&cfg, echo.to_toml()).unwrap();
    assert_eq!(mixkpp(&b, &["--config", cfg.to_str().unwrap(), "evolve"], &[]).status.code(), Some(0));
    let second = RunManifest::read(&b.join("manifest.json")).unwrap();
    assert_eq!(first.outputs, second.outputs);
    assert_eq!(first.input_hash, second.input_hash);
}
