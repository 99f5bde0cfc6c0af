use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use wavemap_cli::{reproduce_all, run, Manifest, RunConfig};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn wavemap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavemap")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn sphere_solve(ceiling: Option<f64>) -> Value {
    let mut cfg = json!({
        "kind": "solve",
        "target": { "kind": "sphere", "m": 3 },
        "data": {
            "kind": "sphere_rotation",
            "angle": { "kind": "gaussian", "amplitude": 1.0, "width": 1.0, "center": 0.0 },
            "velocity": { "kind": "gaussian", "amplitude": 0.5, "width": 1.0, "center": 0.3 }
        },
        "grid": { "h": 0.05, "t_max": 0.5, "x_min": -2.0, "x_max": 2.0 }
    });
    if let Some(c) = ceiling {
        cfg["solve"] = json!({ "options": { "blowup_ceiling": c } });
    }
    cfg
}

#[test]
fn constant_data_has_zero_residuals() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = configs().join("solve_constant.json");
    let o = wavemap(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["metrics"]["wave_map_residual"], json!(0.0));
    assert_eq!(summary["metrics"]["energy_drift"], json!(0.0));
    for f in ["manifest.json", "timing.json", "energy.csv", "slices.csv", "conservation.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = sphere_solve(None);
    cfg["grid"]["spacing"] = json!(0.1);
    let path = write_config(tmp.path(), "bad.json", &cfg);
    let o = wavemap(&["solve", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spacing"));
}

#[test]
fn subcommand_must_match_kind() {
    let cfg = configs().join("counterexample.json");
    let tmp = TempDir::new().unwrap();
    let o = wavemap(&["solve", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn guard_trip_reports_location() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "trip.json", &sphere_solve(Some(1e-3)));
    let o = wavemap(&["solve", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(u, v) = ("));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = configs().join("solve_constant.json");
    let o = wavemap(&["solve", "--config", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_tolerance_exits_one_and_names_the_criterion() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = sphere_solve(None);
    cfg["checks"] = json!([{ "criterion": "impossible-bound", "metric": "data_energy", "max": 0.0 }]);
    let path = write_config(tmp.path(), "strict.json", &cfg);
    let o = wavemap(&["solve", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL impossible-bound"));
}

#[test]
fn overrides_change_the_recorded_config() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "s.json", &sphere_solve(None));
    let out = tmp.path().join("o");
    let o = wavemap(&[
        "solve", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--h", "0.1", "--T", "0.3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["grid"]["h"], json!(0.1));
    assert_eq!(m["grid"]["t_max"], json!(0.3));
}

#[test]
fn recorded_manifest_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig::load(&configs().join("estimate_exotic.json")).unwrap();
    let first = run(&cfg, &tmp.path().join("a")).unwrap();
    let again = RunConfig::load(&tmp.path().join("a/manifest.json")).unwrap();
    assert_eq!(again, cfg);
    let second = run(&again, &tmp.path().join("b")).unwrap();
    assert_eq!(first.summary, second.summary);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = RunConfig::load(&configs().join("estimate_exotic.json")).unwrap();
    cfg.workers = Some(1);
    run(&cfg, &tmp.path().join("one")).unwrap();
    cfg.workers = Some(4);
    run(&cfg, &tmp.path().join("four")).unwrap();
    let (a, b) = (outputs(&tmp.path().join("one")), outputs(&tmp.path().join("four")));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        if name == "manifest.json" {
            continue;
        }
        assert!(bytes == &b[name], "{name} differs");
    }
}

#[test]
fn estimate_run_reports_slope() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig::load(&configs().join("estimate_exotic.json")).unwrap();
    let outcome = run(&cfg, tmp.path()).unwrap();
    assert!(outcome.summary.metrics["slope_exotic"].is_finite());
    let rep = read_json(&tmp.path().join("estimate_exotic.json"));
    assert!(rep["cutoff_scaling_slope"].is_number());
}

#[test]
fn counterexample_grows_monotonically() {
    let tmp = TempDir::new().unwrap();
    let cfg = RunConfig::load(&configs().join("counterexample.json")).unwrap();
    let outcome = run(&cfg, tmp.path()).unwrap();
    assert!(outcome.pass());
    assert_eq!(outcome.summary.metrics["monotone"], 1.0);
    assert!(outcome.summary.metrics["growth"] > 0.0);
    assert!(tmp.path().join("growth.csv").exists());
}

#[test]
fn empty_manifest_passes() {
    let tmp = TempDir::new().unwrap();
    let report = reproduce_all(&Manifest { runs: vec![] }, tmp.path()).unwrap();
    assert!(report.pass);
    assert_eq!(report.status(), 0);
    assert!(report.lines().is_empty());
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn manifest_collects_failures_and_errors() {
    let tmp = TempDir::new().unwrap();
    let mut ok = sphere_solve(None);
    ok["name"] = json!("ok");
    ok["checks"] = json!([{ "criterion": "a", "metric": "data_energy", "min": 0.0 }]);
    let mut tripped = sphere_solve(Some(1e-3));
    tripped["name"] = json!("tripped");
    tripped["checks"] = json!([{ "criterion": "b", "metric": "data_energy", "min": 0.0 }]);
    let path = write_config(tmp.path(), "m.json", &json!({ "runs": [ok, tripped] }));
    let out = tmp.path().join("o");
    let o = wavemap(&["reproduce", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS a:"), "{stdout}");
    assert!(stdout.contains("FAIL b:"), "{stdout}");
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["failures"], json!(["b"]));
    assert!(out.join("ok/summary.json").exists());
}

#[test]
fn duplicate_run_names_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut a = sphere_solve(None);
    a["name"] = json!("same");
    let path = write_config(tmp.path(), "m.json", &json!({ "runs": [a.clone(), a] }));
    let o = wavemap(&["reproduce", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
