use std::path::Path;
use std::process::{Command, Output};

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate")).args(args).output().expect("run simulate")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const MINIMAL: &str = "[resonator]\nradius = 1.0\nrefractive_index = 3.5\n\n[emitter]\ndipole_debye = 10.0\n";

#[test]
fn lists_scenarios() {
    let out = simulate(&["--list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for s in ["spectrum", "poles", "dynamics", "two_mode", "fieldmap", "oracle_compare", "acceptance"] {
        assert!(text.lines().any(|l| l.starts_with(s)), "{s} missing from\n{text}");
    }
}

#[test]
fn empty_config_names_the_missing_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    let out = simulate(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    for k in ["resonator.radius", "resonator.refractive_index", "emitter.dipole_debye"] {
        assert!(err.contains(k), "{err}");
    }
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", &format!("{MINIMAL}dipol = 3\n"));
    let out = simulate(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dipol") && err.contains("line 7"), "{err}");
}

#[test]
fn unknown_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", MINIMAL);
    let out = simulate(&["spectra", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("spectrum"));
}

#[test]
fn runs_are_reproducible_and_echo_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", MINIMAL);
    let mut manifests = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = simulate(&["spectrum", "--config", &cfg, "--set", "spectrum.points=50", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config"]["spectrum"]["points"], 50);
        let csv = std::fs::read_to_string(out_dir.join("cross_section.csv")).unwrap();
        assert_eq!(csv.lines().count(), 51);
        manifests.push(m["files"].clone());
    }
    assert_eq!(manifests[0], manifests[1]);
}
