use std::path::Path;
use std::process::{Command, Output};

fn uavsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavsim")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_small(dir: &Path) -> String {
    let path = dir.join("small.toml");
    let text = "name = \"small\"\nsim_time = 30.0\nseeds = [1]\n\n[uav]\nn_uavs = 30\n";
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn presets_are_listed() {
    let o = uavsim(&["presets"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("scenario-desk") && text.contains("scenario1") && text.contains("scenario2"));
}

#[test]
fn reference_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = uavsim(&["presets", "--reference"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("reference.toml");
    std::fs::write(&path, &o.stdout).unwrap();
    assert_eq!(code(&uavsim(&["validate", path.to_str().unwrap()])), 0);
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "sim_time = -4.0\n").unwrap();
    let o = uavsim(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim_time"));

    std::fs::write(&path, "bogus_key = 1\n").unwrap();
    assert_eq!(code(&uavsim(&["validate", path.to_str().unwrap()])), 1);
    assert_eq!(code(&uavsim(&["validate", "/nonexistent/scenario.toml"])), 1);
    assert_eq!(code(&uavsim(&["run", "--malicious-ratio", "0.5", "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn run_writes_outputs_and_plot_redraws_them() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_small(dir.path());
    let out = dir.path().join("out");
    let log = dir.path().join("decisions.csv");
    let o = uavsim(&[
        "run",
        "--scenario",
        &scenario,
        "--seed",
        "3",
        "--defense",
        "suas-his",
        "--attack",
        "mixed",
        "--malicious-ratio",
        "0.2",
        "--ts",
        "0.1",
        "--out",
        out.to_str().unwrap(),
        "--decision-log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(log.exists());
    for f in ["dr.svg", "fnr.svg", "fpr.svg", "pdr.svg", "summary.md"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let replot = dir.path().join("replot");
    let o =
        uavsim(&["plot", "--results", out.join("results.csv").to_str().unwrap(), "--out", replot.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(replot.join("summary.md").exists());
}

#[test]
fn decision_log_needs_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_small(dir.path());
    let log = dir.path().join("decisions.csv");
    let o = uavsim(&[
        "run",
        "--scenario",
        &scenario,
        "--seeds",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
        "--decision-log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unreadable_results_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    std::fs::write(&path, "scenario,seed\nx,notanumber\n").unwrap();
    assert_eq!(code(&uavsim(&["plot", "--results", path.to_str().unwrap()])), 1);
}
