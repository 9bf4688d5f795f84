use std::path::Path;
use std::process::{Command, Output};

use wirebench_cli::Scenario;
use wirebench_core::catalog;
use wirebench_core::testbench::ChirpSpec;

fn wirebench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wirebench"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_key_exits_with_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[rig]\nload_mas = 3.0\n");
    let out = wirebench(dir.path(), &["--config", &cfg, "efficiency"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("load_mas"));
}

#[test]
fn invalid_value_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[force_control]\nperturbation = 1.5\n");
    let out = wirebench(dir.path(), &["--config", &cfg, "force-control"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("force_control.perturbation"));
}

#[test]
fn missing_config_file_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = wirebench(
        dir.path(),
        &["--config", "/nonexistent/scenario.toml", "solve"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unstable_rig_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::default();
    s.rig.wire = catalog::zylon_3mm();
    s.rig.wire_length = 0.1;
    s.rig.motor_mass = 1e-3;
    s.rig.duration = 1.0;
    s.chirp = ChirpSpec {
        duration: 1.0,
        ..Default::default()
    };
    s.freq_response.fixed_pretension = 300.0;
    let cfg = write_config(dir.path(), &s.to_toml_string());
    let out = wirebench(dir.path(), &["--config", &cfg, "freq-response"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{err}");
    assert!(err.contains("t ="), "{err}");
}

#[test]
fn zero_wrench_solves_to_minimum_tension() {
    let dir = tempfile::tempdir().unwrap();
    let out = wirebench(dir.path(), &["--compensate", "off", "solve"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/solve.csv")).unwrap();
    let tensions: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(tensions.len(), 4);
    assert!(
        tensions.iter().all(|&t| (t - 5.0).abs() < 1e-9),
        "{tensions:?}"
    );
}

#[test]
fn manifest_lists_every_output() {
    let dir = tempfile::tempdir().unwrap();
    assert!(wirebench(dir.path(), &["prestretch"]).status.success());
    let m = std::fs::read_to_string(dir.path().join("out/prestretch_manifest.toml")).unwrap();
    assert!(m.contains("prestretch_schedule.csv"));
    assert!(m.contains("prestretch_report.txt"));
    assert!(m.contains("seed = 0"));
}

#[test]
fn seed_override_changes_efficiency_trials() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    assert!(wirebench(&a, &["--seed", "1", "efficiency"])
        .status
        .success());
    assert!(wirebench(&b, &["--seed", "2", "efficiency"])
        .status
        .success());
    let read = |d: &Path| std::fs::read(d.join("out/efficiency_trials.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}
