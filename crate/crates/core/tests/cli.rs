use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use catk::curves::wiggly_loop;
use catk::ModelSpace;
use serde_json::Value;

fn catk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catk")).args(args).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["error"].is_string());
    v["kind"].as_str().unwrap().to_string()
}

#[test]
fn verify_mode_reports_seven_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("v");
    let out = catk(&["--mode", "verify", "--out", dir.to_str().unwrap()]);
    let rep = report(&dir);
    let results = rep["results"].as_array().unwrap();
    assert_eq!(results.len(), 7);
    let all = results.iter().all(|r| r["passed"].as_bool().unwrap());
    assert_eq!(rep["passed"].as_bool().unwrap(), all);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
    assert!(rep["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(rep["mode"], "verify");
    let csv = fs::read_to_string(dir.join("checks.csv")).unwrap();
    assert!(csv.starts_with("name,samples,worst_margin,passed\n"));
    assert_eq!(csv.lines().count(), 8);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("worst margin"));
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    fs::create_dir(&dir).unwrap();
    let args = [
        "--mode",
        "tighten_sweepout",
        "--slices",
        "5",
        "--sweeps",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ];
    let out = catk(&args);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "io");
    assert!(!dir.join("report.json").exists());
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(catk(&forced).status.code(), Some(0));
    assert!(dir.join("trace.csv").exists());
}

#[test]
fn config_errors_are_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = catk(&["--out", tmp.path().join("a").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");
    let out = catk(&[
        "--mode",
        "verify",
        "--space",
        "sphere",
        "--curvature",
        "-1",
        "--out",
        tmp.path().join("b").to_str().unwrap(),
    ]);
    assert_eq!(error_kind(&out), "invalid-space");
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "mode = \"verify\"\nsweeps = -3\n").unwrap();
    let out = catk(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(error_kind(&out), "config");
}

#[test]
fn main_thm_reports_delta_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("m");
    let out = catk(&[
        "--mode",
        "main_thm",
        "--slices",
        "9",
        "--sweeps",
        "5",
        "--delta",
        "0.2,0.1,0.05",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let rep = report(&dir);
    let band = &rep["results"][0]["band"];
    let rows = band["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let fracs: Vec<f64> = rows.iter().map(|r| r["delta_fraction"].as_f64().unwrap()).collect();
    assert_eq!(fracs, vec![0.2, 0.1, 0.05]);
    for r in rows {
        assert!(r["slices"].as_array().unwrap().iter().any(|i| i == 4));
    }
    assert_eq!(rep["results"][0]["width"]["argmax_index"], 4);
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("sweep,slice,length,energy,residual\n"));
    assert_eq!(trace.lines().count(), 1 + 9 * 5);
}

#[test]
fn torus_loop_tightens_to_unit_length() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "mode = \"tighten_curve\"\nl = 4\n[space]\nkind = \"flat_torus\"\n",
    )
    .unwrap();
    let dir = tmp.path().join("t");
    let out = catk(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().find(|l| l.starts_with("final length")).unwrap();
    let len: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((len - 1.0).abs() < 1e-6, "{len}");
    let rep = report(&dir);
    assert_eq!(rep["results"][0]["winding_preserved"], true);
    assert_eq!(rep["results"][0]["status"], "Converged");
    let text = fs::read_to_string(dir.join("curve.json")).unwrap();
    let c: catk::curves::DiscreteClosedCurve = serde_json::from_str(&text).unwrap();
    assert_eq!(c.winding(), Some([1, 0]));
}

#[test]
fn curve_file_input() {
    let tmp = tempfile::tempdir().unwrap();
    let t = ModelSpace::flat_torus(1.0, 2.0).unwrap();
    let c = wiggly_loop(&t, 0.05, 64).unwrap();
    let path = tmp.path().join("loop.json");
    fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "mode = \"tighten_curve\"\nl = 3\ncurve = {:?}\n[space]\nkind = \"flat_torus\"\nperiods = [1.0, 2.0]\n",
            path.to_str().unwrap()
        ),
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = catk(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fin = report(&dir)["results"][0]["final"]["length"].as_f64().unwrap();
    assert!((fin - 1.0).abs() < 1e-6, "{fin}");

    // the same file against a different configured space is rejected
    let wrong = tmp.path().join("wrong.toml");
    fs::write(
        &wrong,
        format!(
            "mode = \"tighten_curve\"\ncurve = {:?}\n[space]\nkind = \"flat_torus\"\n",
            path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = catk(&[
        "--config",
        wrong.to_str().unwrap(),
        "--out",
        tmp.path().join("w").to_str().unwrap(),
    ]);
    assert_eq!(error_kind(&out), "config");
}
