//! End-to-end checks of the command-line surface: exit codes, config
//! precedence, artifact determinism.

use std::path::Path;
use std::process::Command;

fn capsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capsim"))
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn missing_d_is_a_usage_error() {
    let out = capsim().args(["run", "--model", "asymmetric", "--n", "512"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"kind\":\"usage\""), "stderr: {stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = capsim().args(["run", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_parameters_are_usage_errors() {
    for args in [
        vec!["run", "--model", "nosuch", "--n", "512", "--d", "0.5"],
        vec!["run", "--model", "asymmetric", "--n", "1", "--d", "0.5"],
        vec!["run", "--model", "asymmetric", "--n", "512", "--d", "1.5"],
        vec!["bounds", "--model", "asymmetric", "--n", "512", "--d", "0.5"],
        vec!["run", "--model", "asymmetric", "--n", "512", "--d", "0.5", "--alpha", "2.0"],
    ] {
        let out = capsim().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn dry_run_plans_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let out = capsim()
        .args(["sweep", "--model", "cluster", "--n", "512,1024", "--d", "0.5", "--dry-run"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep plan"));
    assert!(!out_dir.exists(), "dry run must not write artifacts");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{ "model": "asymmetric", "n": [256], "d": 0.25, "seed": 9, "trials": 1 }"#,
    )
    .unwrap();

    // flag --d wins over the file's 0.25
    let out_a = dir.path().join("a");
    let status = capsim()
        .args(["bounds", "--config"])
        .arg(&config_path)
        .args(["--d", "0.75", "--format", "json"])
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(out_a.join("bounds.json")).unwrap();
    assert!(text.contains("\"d\": 0.75"), "flag must win: {text}");
}

#[test]
fn run_artifacts_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let status = capsim()
            .args([
                "run", "--model", "asymmetric", "--n", "2048", "--d", "0.75", "--seed", "7",
                "--trials", "2",
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for f in ["instance.json", "routes.csv", "transmissions.csv", "throughput.csv", "throughput.json"]
    {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "artifact {f} differs across reruns");
    }
}

#[test]
fn sweep_artifacts_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("w1"), dir.path().join("w8"));
    for (out, workers) in [(&a, "1"), (&b, "8")] {
        let status = capsim()
            .args([
                "sweep", "--model", "multicast", "--n", "512,1024,2048", "--d", "0.5", "--seed",
                "11", "--trials", "3", "--workers", workers,
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "artifact {f} differs across workers");
    }
}

#[test]
fn strict_verify_exit_codes() {
    // comfortable scale (the cluster lattice rounds to r = 2 with modest
    // integrality skew): all claims pass, exit 0
    let dir = tempfile::tempdir().unwrap();
    let out = capsim()
        .args([
            "verify", "--model", "cluster", "--n", "100000", "--d", "0.5", "--trials", "5",
            "--seed", "2", "--strict",
        ])
        .arg("--out")
        .arg(dir.path().join("ok"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    // here the cluster lattice rounds down to a single cell, so the client
    // count sits deterministically above the occupancy band: strict exits 3
    let out = capsim()
        .args([
            "verify", "--model", "cluster", "--n", "20000", "--d", "0.5", "--trials", "3",
            "--seed", "2", "--strict",
        ])
        .arg("--out")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn verify_writes_claim_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("v");
    let status = capsim()
        .args([
            "verify", "--model", "asymmetric", "--n", "2048", "--d", "0.75", "--trials", "4",
            "--seed", "5",
        ])
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out_dir.join("verify.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("claim,frequency,reference,pass"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("verify.json")).unwrap())
            .unwrap();
    assert!(json.get("urn_band").is_some());
    assert!(json.get("campaign_claims").is_some());
}
