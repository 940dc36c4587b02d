use std::f64::consts::PI;
use std::io::BufReader;
use std::process::{Command, Output};

use flagbeta::{FieldTag, MeasureSpec};
use flagbeta_harness::report::{anchor, Report, Status};
use flagbeta_harness::samples_io::read_samples;
use serde_json::Value;

fn flagbeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flagbeta")).args(args).output().expect("run flagbeta")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["verify", "main", "--field", "x"][..],
        &["verify", "main", "--samples", "10"],
        &["verify", "main", "--n", "1"],
        &["verify", "main", "--n", "3", "--lambda", "1,2,3,4"],
        &["verify", "main", "--tol", "no_such_tolerance=1"],
        &["verify", "main", "--tol", "z_score"],
        &["verify", "main", "--config", "/nonexistent/flagbeta.toml"],
        &["verify", "nonsense"],
        &["sample", "--n", "3", "--lambda", "0.2,0.2"],
        &["oracle", "--n", "3", "--field", "c"],
        &[],
    ] {
        let out = flagbeta(args);
        assert_eq!(code(&out), 2, "flagbeta {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn verify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qdet.json");
    let out = flagbeta(&["verify", "qdet", "--samples", "1000", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = Report::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report.suite, "qdet");
    assert_eq!(report.seed, 3);
    assert_eq!(report.config_hash.len(), 64);
    assert!(!report.records.is_empty());
    assert!(report.records.iter().all(|r| anchor::ALL.contains(&r.anchor.as_str())));
    assert!(report.records.iter().all(|r| r.runtime_ms.is_none()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qdet:"));
}

#[test]
fn failing_checks_exit_1() {
    let out = flagbeta(&["verify", "main", "--samples", "1000", "--tol", "z_score=0"]);
    assert_eq!(code(&out), 1);
    let report = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.status, Status::Fail);
}

#[test]
fn oracle_divergence_exits_3() {
    let out = flagbeta(&["oracle", "--n", "2", "--lambda", "0.45"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_matches_closed_form() {
    let out = flagbeta(&["oracle", "--n", "2", "--field", "c", "--lambda", "2"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - PI).abs() < 1e-8);
    assert!(v["rel_err"].as_f64().unwrap() < 1e-8);
}

#[test]
fn rhs_prints_closed_forms() {
    let out = flagbeta(&["rhs", "--n", "2", "--field", "c", "--lambda", "2", "--alpha", "1.5"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["rhs"][0].as_f64().unwrap() - PI).abs() < 1e-12);
    assert_eq!(v["converges"], Value::Bool(true));
    // I_1(3/2) = sqrt(pi) Γ(1)/Γ(3/2) = 2
    assert!((v["hua"]["log_I_1"][0].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);

    let out = flagbeta(&["rhs", "--n", "2", "--field", "h", "--lambda", "1.9"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["converges"], Value::Bool(false));
    assert!(v.get("rhs").is_none());
}

#[test]
fn sample_file_shape_and_log_density() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.tsv");
    let out = flagbeta(&["sample", "--n", "3", "--field", "r", "--samples", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 11);
    assert!(data[1..].iter().all(|l| l.split('\t').count() == 6));
    let records = read_samples(BufReader::new(text.as_bytes()), 3, FieldTag::Real).unwrap();
    let spec = MeasureSpec::default_for(3, FieldTag::Real);
    for r in records {
        let ld = spec.log_density(&r.z).unwrap();
        assert!((ld - r.log_density).abs() <= 1e-10 * ld.abs().max(1.0));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\nsamples = 2000\nfield = \"c\"\n[tolerances]\nz_score = 4.5\n").unwrap();
    let out = flagbeta(&["verify", "qdet", "--config", cfg.to_str().unwrap(), "--seed", "9", "--tol", "qdet=1e-7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.seed, 9);
    assert_eq!(report.run.samples, 2000);
    assert_eq!(report.run.field, FieldTag::Complex);
    assert_eq!(report.run.tolerances.z_score, 4.5);
    assert_eq!(report.run.tolerances.qdet, 1e-7);
}

#[test]
fn lambda_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("lambda.txt");
    std::fs::write(&file, "# row 1\n1.5 0.8\n# row 2\n1.2\n").unwrap();
    let out = flagbeta(&["rhs", "--n", "3", "--lambda", file.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let values: Vec<f64> = v["lambda"].as_array().unwrap().iter().map(|e| e["value"][0].as_f64().unwrap()).collect();
    assert_eq!(values, vec![1.5, 0.8, 1.2]);
}

#[test]
fn timings_only_on_request() {
    let out = flagbeta(&["verify", "coeffs", "--n", "3", "--record-timings"]);
    assert_eq!(code(&out), 0);
    let report = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(report.records.iter().all(|r| r.runtime_ms.is_some()));
}
