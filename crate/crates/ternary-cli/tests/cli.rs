use std::path::Path;
use std::process::{Command, Output};

fn ternary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ternary")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("ternary-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn lists_and_prints_presets() {
    let o = ternary(&["preset"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 17);
    let o = ternary(&["preset", "figure7"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("g22 = 100000"));
}

#[test]
fn unknown_preset_fails_with_suggestions() {
    let o = ternary(&["preset", "figure8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("figure"));
}

#[test]
fn sharp_table_has_one_row_per_pair() {
    let o = ternary(&["sharp", "--m1", "0.12,0.2", "--m2", "0.04,0.05"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("M1,M2"));
    let cols = lines[0].split(',').count();
    assert!(lines[1..].iter().all(|l| l.split(',').count() == cols));
}

#[test]
fn mismatched_masses_are_rejected() {
    let o = ternary(&["coreshell", "--m1", "0.1,0.2", "--m2", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coreshell_reports_placement() {
    let o = ternary(&["coreshell", "--m1", "0.02", "--m2", "0.01", "--gamma", "100,0,300"]);
    assert!(stdout(&o).contains("Concentric"));
    let o = ternary(&["coreshell", "--m1", "0.02", "--m2", "0.01", "--gamma", "100,300,300"]);
    assert!(stdout(&o).contains("Tangent"));
}

#[test]
fn calibrate_symmetric_well() {
    let o = ternary(&["calibrate"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err.abs() < 5e-3);
    }
}

#[test]
fn lattice_writes_json() {
    let dir = scratch_dir("lattice");
    let o = ternary(&["lattice", "--count", "9", "--eta", "0.0625,0.03125", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("lattice.json")).unwrap()).unwrap();
    assert_eq!(v["configuration"]["droplets"].as_array().unwrap().len(), 9);
    assert!(v["configuration"]["nn_cv"].as_f64().unwrap() < 0.05);
    assert_eq!(v["scales"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_sweep_is_an_empty_table() {
    let o = ternary(&["sweep", "--preset", "figure2a", "--param", "seed"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

fn small_run(dir: &Path) -> Output {
    ternary(&[
        "simulate", "--preset", "figure2a", "--grid", "32", "--steps", "30", "--epsilon", "0.05", "--seed", "5", "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn simulate_is_deterministic_and_rereadable() {
    let (a, b) = (scratch_dir("sim-a"), scratch_dir("sim-b"));
    let oa = small_run(&a);
    let ob = small_run(&b);
    assert!(oa.status.code().unwrap() <= 1, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(oa.status.code(), ob.status.code());
    let ea = std::fs::read_to_string(a.join("energy.csv")).unwrap();
    let eb = std::fs::read_to_string(b.join("energy.csv")).unwrap();
    assert_eq!(ea, eb);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"].as_bool(), Some(oa.status.success()));
    let o = ternary(&["analyze", a.join("final.tdf").to_str().unwrap(), "--epsilon", "0.05"]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(m["components"].is_array());
}
