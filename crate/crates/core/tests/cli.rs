use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn kerrsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrsim")).current_dir(dir).args(args).env_remove("KERRSIM_WORKERS").output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

const SMALL_GRID: [&str; 4] = ["--override", "omega_m.count=7", "--override", "omega_d.count=9"];

fn sweep(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let cfg = config("rsb_sweep.json");
    let mut args = vec!["sweep-rsb", "--config", cfg.to_str().unwrap(), "--out", out, "--override", "dims=[4,4]"];
    args.extend_from_slice(&SMALL_GRID);
    args.extend_from_slice(extra);
    kerrsim(dir, &args)
}

#[test]
fn derive_writes_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("derive_rsb.json");
    let out = kerrsim(tmp.path(), &["derive", "--config", cfg.to_str().unwrap(), "--out", "d"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((summary["J_AC"].as_f64().unwrap() - 7.4615e-3).abs() < 1e-6);
    let doc: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("d/derived.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kerrsim(tmp.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = kerrsim(tmp.path(), &["derive"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");

    let cfg = config("derive_rsb.json");
    let out = kerrsim(tmp.path(), &["derive", "--config", cfg.to_str().unwrap(), "--override", "constants.c=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid-circuit");

    let out = kerrsim(tmp.path(), &["derive", "--config", cfg.to_str().unwrap(), "--override", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));

    let bsb = config("bsb_sweep.json");
    let out = kerrsim(tmp.path(), &["sweep-rsb", "--config", bsb.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = kerrsim(tmp.path(), &["derive", "--config", cfg.to_str().unwrap(), "--workers", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // a misspelled coupling must not silently default to zero
    let rsb = config("rsb_sweep.json");
    let out = kerrsim(tmp.path(), &["sweep-rsb", "--config", rsb.to_str().unwrap(), "--override", "params.J_ac=0"]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(kerrsim(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("fit_rsb.json");
    // a flat map has no peaks to fit
    let out = sweep(tmp.path(), "flat", &["--override", "eps_d=0"]);
    assert!(out.status.success());
    let map = tmp.path().join("flat/spectral_map.csv");
    let out = kerrsim(tmp.path(), &["fit", "--config", cfg.to_str().unwrap(), "--override", &format!("map={}", map.display())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(sweep(tmp.path(), "r1", &["--workers", "1"]).status.success());
    assert!(sweep(tmp.path(), "r2", &["--workers", "2"]).status.success());
    let a = std::fs::read(tmp.path().join("r1/spectral_map.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("r2/spectral_map.csv")).unwrap();
    assert_eq!(a, b);
    let meta: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("r1/spectral_map.json")).unwrap()).unwrap();
    assert_eq!(meta["poisoned_cells"], 0);
    assert_eq!(meta["kind"], "spectral_map");
}

#[test]
fn zero_coupling_override_straightens_loci() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(sweep(tmp.path(), "j0", &["--override", "params.J_AC=0"]).status.success());
    let mut rdr = csv::Reader::from_path(tmp.path().join("j0/spectral_map.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 63);
    // the probe response peaks at the same drive frequency in every column
    let mut best: std::collections::BTreeMap<String, (f64, String)> = Default::default();
    for r in &rows {
        let abs: f64 = r[4].parse().unwrap();
        let e = best.entry(r[0].to_string()).or_insert((f64::NEG_INFINITY, String::new()));
        if abs > e.0 {
            *e = (abs, r[1].to_string());
        }
    }
    let drives: std::collections::BTreeSet<&String> = best.values().map(|(_, d)| d).collect();
    assert_eq!(drives.len(), 1);
}

#[test]
fn fit_noise_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("rsb_sweep.json");
    let out = kerrsim(tmp.path(), &["sweep-rsb", "--config", cfg.to_str().unwrap(), "--out", "m", "--override", "dims=[4,4]", "--override", "omega_m.count=15", "--override", "omega_d.count=41"]);
    assert!(out.status.success());
    let fit = config("fit_rsb.json");
    let map = format!("map={}", tmp.path().join("m/spectral_map.csv").display());
    let run = |seed: &str, out: &str| {
        let o = kerrsim(tmp.path(), &["fit", "--config", fit.to_str().unwrap(), "--override", &map, "--override", "noise_sigma=0.0002", "--seed", seed, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(tmp.path().join(out).join("peaks.csv")).unwrap()
    };
    assert_eq!(run("7", "f1"), run("7", "f2"));
    assert_ne!(run("7", "f3"), run("8", "f4"));
}

#[test]
fn regime_map_reports_markers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("regime_map.json");
    let out = kerrsim(tmp.path(), &["regime-map", "--config", cfg.to_str().unwrap(), "--override", "resolution=32", "--out", "rm"]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    for m in summary["markers"].as_array().unwrap() {
        assert_eq!(m["J_inside_band"], true);
        assert_eq!(m["V_inside_band"], true);
    }
    assert!(tmp.path().join("rm/regime_map.csv").exists());
}
