use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn zlip(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zlip"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SHORT: &str = "scenario.duration=3.0";

#[test]
fn orbit_in_place_is_zero() {
    let dir = TempDir::new().unwrap();
    let o = zlip(&["orbit"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("orbit.json"));
    assert_eq!(doc["schema_version"], 1);
    for k in ["p", "L", "p_zmp"] {
        assert_eq!(doc["xi_star"][k].as_f64().unwrap(), 0.0);
    }
    assert!(dir.path().join("orbit.csv").exists());
}

#[test]
fn orbit_residual_is_reported() {
    let dir = TempDir::new().unwrap();
    let o = zlip(&["orbit", "--override", "gait.v_x=0.5", "--format", "json"], dir.path());
    assert!(o.status.success());
    let doc = json(&dir.path().join("orbit.json"));
    assert!(doc["residual_sagittal"].as_f64().unwrap() < 1e-8);
    assert!(!dir.path().join("orbit.csv").exists());
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nz0 = 0.8\nheight = 1.0\n").unwrap();
    let o = zlip(&["orbit", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("height"));

    fs::write(&cfg, "[gait]\nt_fa = -0.3\n").unwrap();
    let o = zlip(&["orbit", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_fa"));

    let o = zlip(&["orbit", "--format", "png"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_on_orbit_returns_nominal_and_perturbed_shortens_fa() {
    let dir = TempDir::new().unwrap();
    let o = zlip(&["solve"], dir.path());
    assert!(o.status.success());
    let doc = json(&dir.path().join("solution.json"));
    assert_eq!(doc["status"], "optimal");
    assert!(doc["solution"]["diagnostics"]["cost"].as_f64().unwrap() < 1e-6);
    assert!((doc["solution"]["now"]["t2imp"].as_f64().unwrap() - 0.3).abs() < 1e-6);

    let o = zlip(&["solve", "--override", "solve.dv=[0.3, 0.0]"], dir.path());
    assert!(o.status.success());
    let doc = json(&dir.path().join("solution.json"));
    assert!(doc["solution"]["now"]["t2imp"].as_f64().unwrap() <= 0.3);
    assert!(doc["timing"]["median_s"].as_f64().unwrap() < 0.05);
}

#[test]
fn infeasible_solve_is_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let o = zlip(
        &[
            "solve",
            "--override",
            "gait.mode=multi-domain",
            "--override",
            "solve.domain=OA",
            "--override",
            "mpc.t_min_swing=1.5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("solution.json"))["status"], "infeasible");
}

#[test]
fn simulate_writes_log_metrics_and_plots() {
    let dir = TempDir::new().unwrap();
    let o = zlip(&["simulate", "--override", SHORT, "--format", "csv,json,svg"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("metrics.json"));
    assert_eq!(doc["metrics"]["success"], true);

    let text = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let width = rdr.headers().unwrap().len();
    assert_eq!(rdr.headers().unwrap().get(0), Some("t"));
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 301);
    assert!(rows.iter().all(|r| r.len() == width));

    for svg in ["com_velocity.svg", "phase.svg"] {
        let s = fs::read_to_string(dir.path().join(svg)).unwrap();
        assert!(s.contains("<polyline"));
    }
}

// Every effective parameter, defaults included, is echoed and reproduces the run.
#[test]
fn echoed_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a");
    let o = zlip(&["simulate", "--override", SHORT, "--override", "gait.v_x=0.2", "--format", "csv"], &first);
    assert!(o.status.success());
    let echoed = first.join("config.toml");
    let text = fs::read_to_string(&echoed).unwrap();
    for key in ["z0", "t_ua", "w_delta", "replan_rate", "velocity_tol", "max_iter"] {
        assert!(text.contains(key), "{key} missing from echo");
    }
    let second = dir.path().join("b");
    let o = zlip(&["simulate", "--config", echoed.to_str().unwrap(), "--format", "csv"], &second);
    assert!(o.status.success());
    let log = |d: &Path| fs::read_to_string(d.join("log.csv")).unwrap();
    assert_eq!(log(&first), log(&second));
}

#[test]
fn ablation_writes_one_log_per_mode() {
    let dir = TempDir::new().unwrap();
    let o = zlip(&["ablation", "--override", SHORT], dir.path());
    assert!(o.status.success());
    for mode in ["full", "no-zmp", "no-step-time", "no-foot-placement"] {
        assert!(dir.path().join(format!("log_{mode}.csv")).exists(), "{mode}");
    }
    let doc = json(&dir.path().join("metrics.json"));
    assert_eq!(doc["modes"].as_object().unwrap().len(), 4);
}

#[test]
fn sweep_writes_the_envelope_table() {
    let dir = TempDir::new().unwrap();
    let o = zlip(
        &["sweep", "--override", SHORT, "--override", "sweep.magnitudes=[0.0, 50.0]", "--override", "sweep.modes=[\"full\"]"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("sweep.json"));
    assert_eq!(doc["table"]["cells"].as_array().unwrap().len(), 2);
    assert_eq!(doc["table"]["envelopes"][0]["monotone_boundary"], 50.0);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = zlip(&["orbit"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sub"));
}
