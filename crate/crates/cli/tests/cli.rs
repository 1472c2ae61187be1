use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

use spincell_core::cell::{solve_thermal, CellLayoutConfig, ChamberKind};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn spincell(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spincell"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SPINCELL_RUNS_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn repeated_scan_gives_identical_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("wafer_cell.json");
    for out in ["a", "b"] {
        let o = spincell(&["scan", "pump-power", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/manifest.json")).unwrap();
    let b = std::fs::read(tmp.path().join("b/manifest.json")).unwrap();
    assert_eq!(a, b);

    let manifest = read_json(&tmp.path().join("a/manifest.json"));
    assert_eq!(manifest["seed"], 7);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "records.csv"));
    for f in files {
        let bytes = std::fs::read(tmp.path().join("a").join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn thermal_solve_matches_direct_call() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("cell_layout.json");
    let o = spincell(&["thermal", "solve", "--config", cfg.to_str().unwrap(), "--out", "t"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("t");
    assert_eq!(entries(&out), ["grid.txt", "manifest.json", "slice.csv", "summary.json", "trace.csv"]);

    let l = CellLayoutConfig::load(&cfg).unwrap();
    let field = solve_thermal(&l.stack(), &l.cutouts(), &l.heater(), l.ambient(), &l.thermal_options()).unwrap();
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["summary"]["peak_k"].as_f64().unwrap(), field.peak());
    let chambers = summary["summary"]["chambers"].as_array().unwrap();
    let interaction = chambers.iter().find(|c| c["name"] == "interaction").unwrap();
    assert_eq!(
        interaction["differential_k"].as_f64().unwrap(),
        field.chamber(ChamberKind::Interaction).unwrap().differential_k
    );
}

#[test]
fn malformed_config_exits_one_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("wafer_cell.json")).unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\"fill_pressure_pa\": ", "\"fill_pressure_pa\": -", 1)).unwrap();
    let o = spincell(&["scan", "pump-power", "--config", "bad.json", "--out", "x"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(entries(tmp.path()), ["bad.json"]);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spincell(&["frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = spincell(&["vapor", "props"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));

    let o = spincell(&["acceptance", "run", "--criteria", "99"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(entries(tmp.path()).is_empty());
}

#[test]
fn solver_failure_exits_two_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("cell_layout.json")).unwrap();
    // Far below what double precision can resolve on this grid.
    std::fs::write(tmp.path().join("tight.json"), text.replace("\"tolerance\": 1e-8", "\"tolerance\": 1e-30")).unwrap();
    let o = spincell(&["thermal", "solve", "--config", "tight.json", "--out", "t"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(entries(tmp.path()), ["tight.json"]);
}

#[test]
fn default_run_directory_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("paraffin_cell.json");
    let o = Command::new(env!("CARGO_BIN_EXE_spincell"))
        .args(["vapor", "props", "--config", cfg.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("SPINCELL_RUNS_DIR", "results")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = entries(&tmp.path().join("results"));
    assert_eq!(runs.len(), 1);
    assert!(runs[0].ends_with("_vapor-props"), "{runs:?}");
    assert_eq!(entries(&tmp.path().join("results").join(&runs[0])), ["manifest.json", "props.csv", "props.json"]);
}

#[test]
fn synthesized_spectrum_can_be_fitted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("wafer_cell.json");
    let o = spincell(&["spectrum", "synth", "--config", cfg.to_str().unwrap(), "--out", "s"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = spincell(
        &["spectrum", "fit", "--input", "s/spectrum.csv", "--sidecar", "s/spectrum.json", "--out", "f"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = read_json(&tmp.path().join("s/model.json"))["model_fwhm_hz"].as_f64().unwrap();
    let fit = read_json(&tmp.path().join("f/fit.json"));
    let chosen = if fit["n_components"] == 2 { &fit["double"] } else { &fit["single"] };
    let fwhm = chosen["components"][0]["fwhm"].as_f64().unwrap();
    assert!((fwhm / model - 1.0).abs() < 0.05, "{fwhm} vs {model}");
}

#[test]
fn bfield_map_and_acceptance_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("cell_layout.json");
    let o = spincell(&["bfield", "map", "--config", cfg.to_str().unwrap(), "--current-a", "0.015", "--out", "b"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fig = read_json(&tmp.path().join("b/chamber_field.json"));
    assert!(fig["figure"]["suppression_ratio"].as_f64().unwrap() >= 5.0);

    let o = spincell(&["acceptance", "run", "--criteria", "4,7", "--out", "acc"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(tmp.path().join("acc/acceptance.txt")).unwrap();
    assert!(table.lines().next().unwrap().starts_with("PASS  4"));
    assert!(table.contains("FAIL  7"));
}
