use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eplsim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eplsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn negative_tau_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["pdc", "--tau", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn visibility_p_outside_unit_interval_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["visibility", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cavity_overflow_exits_3_and_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["cavity", "--tau", "0.5", "--eta", "1", "--rounds", "10", "--nmax", "4"]);
    assert_eq!(o.status.code(), Some(3));
    let s = summary(dir.path());
    assert!(!s["overflow"].is_null());
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn zero_gain_gives_only_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["pdc", "--tau", "0", "--nmax", "4"]);
    assert!(o.status.success());
    let rows = csv_rows(&dir.path().join("distribution.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "0");
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn pdc_summary_reports_peak_and_oracle_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["pdc", "--tau", "1", "--nmax", "8", "--verify-oracle"]);
    assert!(o.status.success());
    let s = summary(dir.path());
    assert_eq!(s["peak_n"], 1);
    assert!(s["oracle"]["max_amplitude_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(s["manifest"]["subcommand"], "pdc");
}

#[test]
fn json_format_writes_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = eplsim(dir.path(), &["pdc", "--tau", "0.3", "--nmax", "4", "--format", "json"]);
    assert!(o.status.success());
    assert!(dir.path().join("distribution.json").exists());
    assert!(!dir.path().join("distribution.csv").exists());
}

#[test]
fn four_photon_reduction_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/scripts/four_photon_reduction.json");
    let o = eplsim(dir.path(), &["measure", "--script", script]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path());
    assert_eq!(s["schmidt_ranks"], serde_json::json!([2]));
    assert!((s["joint_probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn werner_visibility_is_p() {
    for p in ["0.92", "0.83"] {
        let dir = tempfile::tempdir().unwrap();
        assert!(eplsim(dir.path(), &["visibility", "--p", p]).status.success());
        assert_eq!(summary(dir.path())["visibility"].as_f64().unwrap(), p.parse::<f64>().unwrap());
    }
}

#[test]
fn fringe_period_follows_pump_wavelength() {
    let dir = tempfile::tempdir().unwrap();
    assert!(eplsim(dir.path(), &["fringe", "--theta", "0.3"]).status.success());
    let period = summary(dir.path())["period_nm"].as_f64().unwrap();
    assert!((period - 195.0).abs() < 0.5, "{period}");
}
