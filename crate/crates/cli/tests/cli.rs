use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use goldenrate::correlations::ClosedFormModel;
use goldenrate::mode_data::parse_modes;
use goldenrate::presets::BathPreset;
use goldenrate::rate_engine::compute_rate;
use goldenrate::units::{beta_from_temperature, NdcUnit};
use goldenrate::{EnergyUnit, EnergyValue, RateOptions};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goldenrate"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn scan_is_byte_identical_and_carries_provenance() {
    let args = ["scan", "--config", "configs/caseIB.json", "--gaps", "0:20:2"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    for key in ["# schema=goldenrate.run/1", "# config_sha256=", "# units=", "# kappa="] {
        assert!(text.contains(key), "missing {key}");
    }
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "gap,k_fgr,k_condon,ln_kappa,imag_residual,status");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.last().unwrap() == "ok"));
}

#[test]
fn config_hash_tracks_the_merged_config() {
    let hash = |args: &[&str]| {
        let text = stdout(&run(args));
        text.lines().find(|l| l.starts_with("# config_sha256=")).unwrap().to_string()
    };
    let a = hash(&["rate", "--case", "I-A", "--gap", "2"]);
    let b = hash(&["rate", "--case", "I-A", "--gap", "3"]);
    assert_ne!(a, b);
    assert_eq!(a, hash(&["rate", "--case", "I-A", "--gap", "2"]));
}

#[test]
fn bound_violation_exits_with_config_error() {
    let o = run(&["validate", "--config", "configs/bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("|J_F|"));
    let o = run(&["scan", "--config", "configs/bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn valid_config_validates() {
    let o = run(&["validate", "--config", "configs/caseIIC.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn dry_run_prints_resolved_parameters_without_computing() {
    let o = run(&["scan", "--config", "configs/bathE.json", "--dry-run"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dimensional"], true);
    assert_eq!(v["route"], "quadrature");
    let gap = v["gaps"][0].as_f64().unwrap();
    let expect = EnergyValue::new(1.7816, EnergyUnit::Ev).to_internal();
    assert!((gap / expect - 1.0).abs() < 1e-12);
}

#[test]
fn dimensional_rate_matches_library_in_per_ns() {
    let o = run(&[
        "rate",
        "--modes",
        "data/synthetic_5mode.csv",
        "--bath",
        "A",
        "--temperature",
        "300",
        "--gap",
        "1.7816eV",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# rate_unit=ns^-1"));
    let row = &data_rows(&text)[0];
    let cli: f64 = row[1].parse().unwrap();

    let modes = parse_modes(&root().join("data/synthetic_5mode.csv"), NdcUnit::Atomic).unwrap();
    let triple = BathPreset::A.parameters().apply(&modes);
    let model = ClosedFormModel::new(triple, beta_from_temperature(300.0).unwrap()).unwrap();
    let gap = EnergyValue::new(1.7816, EnergyUnit::Ev).to_internal();
    let lib = compute_rate(&model, gap, &RateOptions::default()).unwrap().k_fgr * 1e3;
    assert!((cli / lib - 1.0).abs() < 1e-12, "{cli} vs {lib}");
}

#[test]
fn mode_paths_in_configs_are_relative_to_the_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_goldenrate"))
        .args(["validate", "--config"])
        .arg(root().join("configs/bathA.json"))
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    // I/O
    let o = run(&["rate", "--modes", "no_such_file.csv", "--temperature", "300", "--gap", "1eV"]);
    assert_eq!(o.status.code(), Some(3));
    // numerical: Ohmic correlations at T = 0 decay too slowly for the grid cap
    let o = run(&["rate", "--case", "I-A", "--zero-temperature", "--gap", "2"]);
    assert_eq!(o.status.code(), Some(2));
    // config
    let o = run(&["rate", "--case", "I-A", "--gap", "1", "--gap", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["rate", "--case", "I-A", "--gap", "1eV"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["rate", "--modes", "data/synthetic_5mode.csv", "--gap", "1eV"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_schema_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("old.json");
    std::fs::write(&path, r#"{"schema": "goldenrate.run/0", "input": {"case": "I-A"}}"#).unwrap();
    let o = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn corr_starts_from_the_origin_identities() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corr.csv");
    let o = run(&["corr", "--case", "II-B", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 201);
    let first: Vec<f64> = rows[0].iter().map(|x| x.parse().unwrap()).collect();
    // K(0) = F(0) = Im D(0) = 0, D_R(0) > 0
    assert_eq!(first[0], 0.0);
    assert!(first[1].abs() < 1e-14 && first[2].abs() < 1e-14);
    assert!(first[3] > 0.0 && first[4].abs() < 1e-14);
    assert!(first[5].abs() < 1e-14 && first[6].abs() < 1e-14);
}

#[test]
fn oracle_passes_on_a_coarse_sweep() {
    let o = run(&["oracle", "--points", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.last().unwrap() == "PASS"));
}
