use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn glref(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glref"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("GLREF_CONFIG")
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).expect("error JSON")
}

#[test]
fn spectrum_artifacts_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["spectrum", "--find-tau0", "--set", "spectral.points=801", "--set", "spectrum.alpha_steps=9"];
    for d in [&a, &b] {
        let out = glref(d.path(), &args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["spectrum.csv", "constants.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let c: Value = serde_json::from_slice(&fs::read(a.path().join("constants.json")).unwrap()).unwrap();
    let l0 = c["constants"]["lambda0"].as_f64().expect("lambda0");
    assert!((l0 - 0.57).abs() < 0.01);
    let csv = fs::read_to_string(a.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("alpha,lambda1,lambda2\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn strip_above_critical_length_gives_zero_energy() {
    let d = tempfile::tempdir().unwrap();
    let lc = 0.568_383_8f64.powf(-1.5);
    let l = format!("{}", lc + 0.1);
    let out = glref(d.path(), &["strip", "--L", &l]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(d.path().join("el_table.jsonl")).unwrap();
    let table = glref::strip::ELTable::from_jsonl(&text).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].estimate, 0.0);
}

#[test]
fn energy_reports_whole_curve_chord() {
    let d = tempfile::tempdir().unwrap();
    let out = glref(
        d.path(),
        &["energy", "--field", "y-x", "--kappa", "50", "--rho", "0.01", "--set", "spectral.points=2001"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&fs::read(d.path().join("energy.json")).unwrap()).unwrap();
    assert_eq!(v["classification"], "whole-curve");
    assert!((v["Gamma_len"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["c0"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn violated_assumption_and_bad_input_are_reported_as_json() {
    let d = tempfile::tempdir().unwrap();
    let out = glref(d.path(), &["energy", "--field", "y-x^3", "--rho", "0.01", "--set", "spectral.points=801"]);
    let v: Value = serde_json::from_slice(&fs::read(d.path().join("energy.json")).unwrap_or_default()).unwrap_or(Value::Null);
    if out.status.success() {
        assert_eq!(v["classification"], "violates-assumption");
        assert!(v["near_critical"].is_null());
    } else {
        assert_eq!(out.status.code(), Some(1));
        assert!(error_json(&out)["error"]["kind"].is_string());
    }

    let out = glref(d.path(), &["cover", "--ell", "0.6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "scale_too_large");

    let poly = d.path().join("bad.poly");
    fs::write(&poly, "0 0\n1 x\n").unwrap();
    let out = glref(d.path(), &["cover", "--omega", poly.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "parse");
}

#[test]
fn usage_and_config_errors_exit_with_2() {
    let d = tempfile::tempdir().unwrap();
    let out = glref(d.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
    let out = glref(d.path(), &["gamma", "--set", "no.such.key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");
}

#[test]
fn config_file_env_and_flags_layer_in_order() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("run.conf");
    fs::write(&file, "cover.ell = 0.04\ncover.resolution = 0.005\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_glref"))
        .args(["cover", "--config", file.to_str().unwrap(), "--out-dir", d.path().to_str().unwrap()])
        .env("GLREF_COVER_ELL", "0.03")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = fs::read_to_string(d.path().join("config.resolved")).unwrap();
    assert!(resolved.contains("cover.ell = 0.03"), "{resolved}");
    assert!(resolved.contains("cover.resolution = 0.005"));
}
