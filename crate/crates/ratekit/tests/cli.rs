use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ratekit::SweepTable;

const FIG4_AARF: &str = r#"{
    "rates_bps": [1000000, 2000000],
    "alphas": [0.9, 0.2],
    "mean_packet_bits": 8000,
    "algorithm": "aarf",
    "s": 10,
    "f": 2,
    "beta_max": 3
}"#;

fn ratekit(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ratekit"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RATEKIT_THREADS", t),
        None => cmd.env_remove("RATEKIT_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn sweep_spec(grid: &str, extra: &str) -> String {
    format!(
        r#"{{"base": {FIG4_AARF}, "param": "alphas[0]", "grid": {grid},
            "algorithms": ["arf", "aarf", "paarf"]{extra}}}"#
    )
}

#[test]
fn validate_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", FIG4_AARF);
    let out = ratekit(&["validate", &ok], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");

    let bad = FIG4_AARF
        .replace("[1000000, 2000000]", "[2000000, 1000000]")
        .replace("[0.9, 0.2]", "[1.0, 0.2]");
    let bad = write(dir.path(), "bad.json", &bad);
    let out = ratekit(&["validate", &bad], None);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 2, "{text}");
}

#[test]
fn analyze_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.json", FIG4_AARF);
    let out = ratekit(&["analyze", &path], None);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let tau = v["analytic"]["throughput_bps"].as_f64().unwrap();
    assert!(tau > 0.8e6 && tau < 0.95e6);
    assert_eq!(v["analytic"]["states"].as_array().unwrap().len(), 9);

    let out = ratekit(&["analyze", &path, "--with-sim", "--packets", "20000"], None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["simulation"]["throughput_bps"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_without_a_closed_form_fails_unless_simulated() {
    let dir = tempfile::tempdir().unwrap();
    let text = FIG4_AARF.replace(
        "\"beta_max\": 3",
        r#""beta_max": 3, "overhead": {"difs_us": 50, "sifs_us": 10, "t_ack_us": 112, "cw_min": 32, "cw_max": 1023, "gamma_max": 5}"#,
    );
    let path = write(dir.path(), "oh.json", &text);
    assert_eq!(ratekit(&["analyze", &path], None).status.code(), Some(2));
    let out = ratekit(&["analyze", &path, "--with-sim", "--packets", "20000"], None);
    assert!(out.status.success());
}

#[test]
fn sweep_writes_csv_and_dat() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.json", &sweep_spec("[0.7, 0.8, 0.9]", ""));
    let csv = dir.path().join("out.csv");
    let dat = dir.path().join("out.dat");
    let out = ratekit(
        &["sweep", &spec, "--out", csv.to_str().unwrap(), "--dat", dat.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = SweepTable::parse_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 9);
    assert_eq!(table.param, "alphas[0]");
    assert!(table.rows.iter().all(|r| r.analytic_tau_bps.is_some() && r.sim_tau_bps.is_none()));
    assert_eq!(fs::read_to_string(&dat).unwrap().matches("# algo").count(), 3);
}

#[test]
fn failed_points_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.json", &sweep_spec("[0.7, 1.2]", ""));
    let out = ratekit(&["sweep", &spec], None);
    assert_eq!(out.status.code(), Some(1));
    let table = SweepTable::parse_csv(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert!(table.notes.iter().any(|n| n.starts_with("error in row 4")));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sweep.json",
        &sweep_spec("[0.7, 0.8, 0.9, 0.95]", r#", "with_sim": true, "packets": 50000"#),
    );
    let one = ratekit(&["sweep", &spec], Some("1"));
    let three = ratekit(&["sweep", &spec], Some("3"));
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
    let seeded = ratekit(&["sweep", &spec, "--seed", "9"], Some("1"));
    assert_ne!(one.stdout, seeded.stdout);
    assert_eq!(ratekit(&["sweep", &spec], Some("zero")).status.code(), Some(2));
}

#[test]
fn figure_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("figs");
    let out = ratekit(&["figure", "5", "--out", out_dir.to_str().unwrap()], None);
    assert!(out.status.success());
    let table = SweepTable::parse_csv(&fs::read_to_string(out_dir.join("fig5.csv")).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 16 * 3);
    assert!(out_dir.join("fig5.dat").exists());

    let out = ratekit(&["figure", "8", "--out", out_dir.to_str().unwrap(), "--packets", "20000"], None);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("fig8.csv")).unwrap();
    assert!(text.contains("# simulation only"));
    let table = SweepTable::parse_csv(&text).unwrap();
    assert!(table.rows.iter().all(|r| r.sim_tau_bps.is_some()));
    assert!(table
        .rows
        .iter()
        .filter(|r| r.algo != ratekit_core::AlgorithmKind::Arf)
        .all(|r| r.analytic_tau_bps.is_none()));

    assert!(!ratekit(&["figure", "3"], None).status.success());
}
