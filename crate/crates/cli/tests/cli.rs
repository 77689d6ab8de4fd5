use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Runs the binary with `--out` into a temp dir; returns exit code and report.
fn run(args: &[&str], config: &Path) -> (i32, Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_afree"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let code = status.status.code().unwrap();
    let text = std::fs::read_to_string(&out).unwrap_or_else(|_| panic!("no report; stderr: {}", String::from_utf8_lossy(&status.stderr)));
    (code, serde_json::from_str(&text).unwrap(), dir)
}

fn write_config(dir: &Path, operator: &str, extra: Value) -> PathBuf {
    std::fs::write(dir.join("op.txt"), operator).unwrap();
    let mut cfg = serde_json::json!({ "operator": "op.txt" });
    if let (Value::Object(a), Value::Object(b)) = (&mut cfg, extra) {
        a.extend(b);
    }
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn symbol_of_the_worked_example() {
    let (code, r, _d) = run(&["symbol"], &fixture("worked_example.json"));
    assert_eq!(code, 0);
    let eq = &r["principal_part"][0];
    assert_eq!(eq["weights"], serde_json::json!(["1", "1/2"]));
    assert_eq!(eq["dominating_set"], serde_json::json!([[0, 2], [1, 0]]));
}

#[test]
fn conflicting_orders_exit_three() {
    let (code, r, _d) = run(&["symbol"], &fixture("infeasible.json"));
    assert_eq!(code, 3);
    let msg = r["error"]["message"].as_str().unwrap();
    assert!(msg.contains("2*b1 = 1") && msg.contains("3*b2 = 1"), "{msg}");
}

#[test]
fn transport_weights_are_isotropic() {
    let (code, r, _d) = run(&["symbol"], &fixture("transport.json"));
    assert_eq!(code, 0);
    assert_eq!(r["principal_part"][0]["weights"], serde_json::json!(["1", "1"]));
}

#[test]
fn paired_cone_is_the_antidiagonal() {
    let (code, r, _d) = run(&["wavecone", "--method", "both"], &fixture("paired.json"));
    assert_eq!(code, 0);
    let c = &r["cones"][0];
    assert_eq!(c["exact"]["dimension"], 1);
    let b: Vec<f64> = serde_json::from_value(c["exact"]["basis"][0].clone()).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((b[0].abs() - s).abs() < 1e-12 && (b[0] + b[1]).abs() < 1e-12, "{b:?}");
    assert!(c["max_principal_angle"].as_f64().unwrap() < 1e-8);
    assert_eq!(c["agree"], true);
}

#[test]
fn divergence_cone_is_trivial() {
    for method in ["exact", "sampled"] {
        let (code, r, _d) = run(&["wavecone", "--method", method], &fixture("divergence.json"));
        assert_eq!(code, 0);
        assert_eq!(r["cones"][0][method]["dimension"], 0);
    }
}

#[test]
fn point_mass_is_not_transport_free() {
    let (code, r, _d) = run(&["check-afree"], &fixture("transport.json"));
    assert_eq!(code, 4);
    assert_eq!(r["afree"]["pass"], false);
}

#[test]
fn verify_paired_atom() {
    let (code, r, _d) = run(&["verify"], &fixture("paired.json"));
    assert_eq!(code, 0, "{r:#}");
    assert_eq!(r["verdicts"]["pass"], true);
    assert_eq!(r["exit_code"], 0);
}

#[test]
fn verify_line_measure_fails_the_certificate() {
    let (code, r, _d) = run(&["verify"], &fixture("line_chain_run.json"));
    assert_eq!(code, 5);
    assert_eq!(r["error"]["kind"], "certificate_failed");
    assert_eq!(r["certificates"][0]["verdict"], false);
}

#[test]
fn missing_measure_exits_two_with_a_report() {
    let (code, r, _d) = run(&["verify"], &fixture("missing_measure.json"));
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "io");
}

#[test]
fn verify_is_deterministic() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing_ms");
        serde_json::to_string(&v).unwrap()
    };
    let (_, a, _d1) = run(&["verify", "--seed", "11"], &fixture("paired.json"));
    let (_, b, _d2) = run(&["verify", "--seed", "11"], &fixture("paired.json"));
    assert_eq!(a["config"]["seed"], 11);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn csv_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let status = Command::new(env!("CARGO_BIN_EXE_afree"))
        .args(["check-singularity", "--csv", "--config"])
        .arg(fixture("paired.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("run.singularity_p1.csv")).unwrap();
    assert!(csv.starts_with("epsilon,alpha,beta,inner_mass,outer_mass,ratio\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "D[1,0 u1 = 0;", serde_json::json!({}));
    let (code, r, _d) = run(&["parse"], &cfg);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "parse");
}

#[test]
fn oversized_systems_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "D[1,0,0,0,0,0,0,0,0] u1 = 0;", serde_json::json!({}));
    let (code, r, _d) = run(&["parse"], &cfg);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "size");
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "D[1] u1 = 0;", serde_json::json!({ "epsilons": { "first": 1, "count": 3 } }));
    let out = Command::new(env!("CARGO_BIN_EXE_afree")).arg("symbol").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_afree")).arg("symbol").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blowup_reports_every_equation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("point_mass.json"), dir.path().join("mu.json")).unwrap();
    let cfg = write_config(
        dir.path(),
        "D[1,0] u1 + 2 * D[0,1] u1 + 3 * D[0,0] u1 = 0;",
        serde_json::json!({ "measure": "mu.json", "points": [[0.0, 0.0]] }),
    );
    let (code, r, _d) = run(&["blowup"], &cfg);
    assert_eq!(code, 0);
    let b = &r["blowups"][0];
    // Lower-order remainders halve with ε.
    let rem: Vec<[f64; 2]> = serde_json::from_value(b["remainders"].clone()).unwrap();
    for w in rem.windows(2) {
        assert!((w[0][0] / w[1][0] - 2.0).abs() < 1e-9);
    }
}
