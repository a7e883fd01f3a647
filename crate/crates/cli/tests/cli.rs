use std::path::Path;
use std::process::{Command, Output};

fn ymgap(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ymgap"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lie_check_on_su2() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymgap(&["lie-check"], r#"{"gauge_group": "su2"}"#, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("out/lie_check.json"));
    assert!(r["result"]["jacobi_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["passed"], true);
}

#[test]
fn negative_cutoff_is_rejected_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymgap(&["spectrum"], r#"{"seed": 1, "fock": {"n_max": -2}}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fock.n_max"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn randomized_suites_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymgap(&["fock-check"], "{}", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    // partial outputs are removed
    assert!(!dir.path().join("out").exists());

    let o = ymgap(&["fock-check", "--seed", "3"], "{}", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/fock_operator.txt").exists());
}

#[test]
fn unknown_group_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ymgap(&["lie-check"], r#"{"gauge_group": "g2"}"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gauge_group"));
}

#[test]
fn gap_scan_over_couplings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 5, "modes": {"M": 3, "k_max": 1}, "fock": {"n_max": 6},
                  "gap_scan": {"couplings": [0, 0.5, 1]}}"#;
    let o = ymgap(&["gap-scan"], cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/gap_scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "M,n_max,coupling,k,lambda0,lambda1,gap,min_slack");
    assert_eq!(lines.len(), 4);
    let report = json(&dir.path().join("out/gap_scan.json"));
    let omegas = report["result"][0]["omegas"].as_array().unwrap();
    let w_min = omegas.iter().map(|w| w.as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    let gap0: f64 = lines[1].split(',').nth(6).unwrap().parse().unwrap();
    assert!((gap0 - w_min).abs() < 1e-12, "{gap0} {w_min}");
}

#[test]
fn propagate_reports_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fock": {"n_max": 16}, "propagate": {"t": 1.0, "N": 64}}"#;
    let o = ymgap(&["propagate"], cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("out/propagate.json"));
    let res = &r["result"];
    assert!(res["amplitude_re"].is_f64() && res["amplitude_im"].is_f64());
    assert!(res["error_vs_closed_form"].as_f64().unwrap() <= 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("out/propagate_convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
