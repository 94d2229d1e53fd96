use std::path::Path;
use std::process::{Command, Output};

use chpoisson_cli::report::Report;
use chpoisson_cli::scenario::{parse_scenario, CheckKind};
use chpoisson_cli::{catalog, load, Overrides};

fn pch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const OSCILLATOR: &str = r#"{
  "name": "oscillator",
  "seed": 3,
  "checks": [{
    "id": "free",
    "check": { "simulate": {
      "system": {
        "base_dim": 1,
        "structure": { "canonical": { "n": 1 } },
        "hamiltonian": { "norm_squared": { "dim": 2 } }
      },
      "x0": [1.0, 0.0],
      "t_final": 1.0,
      "dt": 0.01,
      "expect": { "max_energy_drift": 1e-8 }
    } }
  }]
}"#;

#[test]
fn minimal_scenario_parses() {
    let s = parse_scenario(OSCILLATOR).unwrap();
    assert_eq!(s.seed, 3);
    assert_eq!(s.sampling.count, 100);
    assert_eq!(s.checks.len(), 1);
    assert!(matches!(s.checks[0].check, CheckKind::Simulate { .. }));
}

#[test]
fn every_catalog_entry_parses() {
    for name in catalog::names() {
        load(&format!("catalog:{name}")).unwrap_or_else(|e| panic!("{name}: {e:?}"));
    }
}

#[test]
fn golden_coisotropic_scenario() {
    let s = load("catalog:coisotropic_r4").unwrap();
    let kinds: Vec<&str> = s.checks.iter().map(|c| c.check.name()).collect();
    assert_eq!(kinds, ["reducibility", "classify", "reduced_bracket"]);
    let out = chpoisson_cli::execute(&s).unwrap();
    assert!(out.report.all_pass());
    assert_eq!(out.report.check("reducible").unwrap().points_tested, 100);
}

#[test]
fn unknown_function_reports_path() {
    let bad = OSCILLATOR.replace("norm_squared", "norm_cubed");
    let err = parse_scenario(&bad).unwrap_err();
    let msg = err[0].to_string();
    assert!(msg.starts_with("checks[0].check.simulate.system.hamiltonian"), "{msg}");
    assert!(msg.contains("norm_cubed"), "{msg}");
}

#[test]
fn missing_seed_is_rejected() {
    let bad = OSCILLATOR.replace("\"seed\": 3,", "");
    let err = parse_scenario(&bad).unwrap_err();
    assert!(err[0].to_string().contains("seed"), "{}", err[0]);
}

#[test]
fn dimension_mismatch_and_duplicate_ids_are_both_reported() {
    let s: serde_json::Value = serde_json::from_str(OSCILLATOR).unwrap();
    let mut wrong = s["checks"][0].clone();
    wrong["check"]["simulate"]["x0"] = serde_json::json!([1.0, 0.0, 0.0]);
    let mut doc = s.clone();
    doc["checks"] = serde_json::json!([s["checks"][0], wrong]);
    let err = parse_scenario(&doc.to_string()).unwrap_err();
    let all: Vec<String> = err.iter().map(|e| e.to_string()).collect();
    assert!(all.iter().any(|m| m.contains("duplicate")), "{all:?}");
    assert!(all.iter().any(|m| m.contains("checks[1].check.simulate.x0")), "{all:?}");
}

#[test]
fn samples_override_clears_per_check_counts() {
    let mut s = load("catalog:poisson_structures").unwrap();
    Overrides {
        seed: Some(99),
        samples: Some(7),
        ..Default::default()
    }
    .apply(&mut s);
    assert_eq!(s.seed, 99);
    assert!(s.checks.iter().all(|c| c.samples.is_none()));
    let r = chpoisson_cli::execute(&s).unwrap().report;
    assert_eq!(r.samples, 7);
    assert!(r.checks.iter().all(|c| c.points_tested == 7), "{r:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", OSCILLATOR);
    let broken = write(dir.path(), "broken.json", &OSCILLATOR.replace("\"seed\": 3,", ""));
    let empty = write(
        dir.path(),
        "empty.json",
        r#"{ "name": "empty", "seed": 1, "checks": [] }"#,
    );

    assert_eq!(pch(&["run", &ok]).status.code(), Some(0));
    assert_eq!(pch(&["run", "catalog:counterexample_r2"]).status.code(), Some(1));
    let out = pch(&["run", &broken]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert_eq!(pch(&["run", "catalog:no_such_entry"]).status.code(), Some(2));

    let out = pch(&["run", &empty]);
    assert_eq!(out.status.code(), Some(0));
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.checks.is_empty());
}

#[test]
fn wall_time_goes_to_stderr_only() {
    let out = pch(&["run", "catalog:counterexample_r2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall_time_s"));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("wall_time"));
}

#[test]
fn export_round_trip_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = pch(&["run", "catalog:cosymplectic_r4", "--out", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let out = pch(&["export", json.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("id,check,verdict,points_tested,points_skipped,max_residual,error")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("reducible,reducibility,pass,100,"), "{}", rows[0]);

    let report: Report = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let again = pch(&["export", json.to_str().unwrap(), "--format", "json"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), report.to_json());
}

#[test]
fn trajectories_are_written_per_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "osc.json", OSCILLATOR);
    let traj = dir.path().join("traj");
    let out = pch(&["run", &scenario, "--trajectories", traj.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(traj.join("free.csv")).unwrap();
    // Header plus 101 states for t in [0, 1] at dt = 0.01.
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn catalog_list_and_show() {
    let out = pch(&["catalog", "list"]);
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(names, catalog::names());
    let out = pch(&["catalog", "show", "harmonic_oscillator"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        catalog::text("harmonic_oscillator").unwrap()
    );
}
