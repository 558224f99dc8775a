//! Exit-code contract, report determinism, and matrix round-trip through
//! the command-line binary.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_accretive-lab"))
}

fn write_json_pair(dir: &Path) {
    std::fs::write(
        dir.join("t.json"),
        r#"{"dim":2,"entries":[[1,0],[0,0],[0,0],[2,0]]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("a.json"),
        r#"{"dim":2,"entries":[[0.5,0],[0,0],[0,0],[1,0]]}"#,
    )
    .unwrap();
}

#[test]
fn verify_b_2_pair_exits_0_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["verify", "--t", "t.json", "--a", "a.json", "--out", "report.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certificates"].as_array().unwrap().len(), 1);
    assert_eq!(report["certificates"][0]["b"]["Finite"], 2.0);
    assert_eq!(report["summary"]["hard_checks_failed"], 0);
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["verify", "--t", "missing.mtx", "--a", "missing.mtx"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_matrix_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.mtx"), "not a matrix\n").unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["verify", "--t", "bad.mtx", "--a", "a.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "diagnostic was: {err}");
}

#[test]
fn conflicting_sources_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["verify", "--t", "t.json", "--a", "a.json", "--family", "diagonal", "--dim", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trotter_non_hermitian_without_waiver_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("t.json"),
        r#"{"dim":2,"entries":[[0,0],[1,0],[0,0],[0,0]]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("a.json"),
        r#"{"dim":2,"entries":[[1,0],[0,0],[0,0],[1,0]]}"#,
    )
    .unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["trotter", "--t", "t.json", "--a", "a.json", "--out", "report.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let exp = &report["experiments"][0];
    assert_eq!(exp["hypothesis_report"]["a_selfadjoint"], false);
    assert!(exp["fit_skipped_reason"]
        .as_str()
        .unwrap()
        .contains("hypothesis failed"));
    assert_eq!(report["summary"]["hard_checks_failed"], 1);

    // waiver turns the same inputs into a completed experiment
    let out = bin()
        .current_dir(dir.path())
        .args(["trotter", "--t", "t.json", "--a", "a.json", "--waiver", "--out", "waived.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("waived.json")).unwrap()).unwrap();
    assert_eq!(report["experiments"][0]["hypothesis_waived"], true);
}

#[test]
fn trotter_writes_csv_sidecar_with_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args([
            "trotter", "--t", "t.json", "--a", "a.json",
            "--n-grid", "2,4,8,16", "--t-grid", "0.5,1.0", "--out", "report.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("report_experiment_0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,n,error,adjoint_error");
    assert_eq!(lines.len(), 1 + 8);
}

#[test]
fn generate_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "generate", "--family", "rotated", "--dim", "4",
            "--param", "target_b=3", "--seed", "11", "--out", "pair",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(dir.path().join("pair_t.mtx").exists());
    assert!(dir.path().join("pair_a.mtx").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("b = "), "stdout: {stdout}");

    let out = bin()
        .current_dir(dir.path())
        .args(["verify", "--t", "pair_t.mtx", "--a", "pair_a.mtx", "--out", "v.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    // shortest round-trip serialization must preserve b across the files
    let b = report["certificates"][0]["b"]["Finite"].as_f64().unwrap();
    assert!((b - 3.0).abs() < 1e-8, "b = {b}");
}

#[test]
fn verify_determinism_byte_identical() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .current_dir(dir.path())
            .args([
                "verify", "--family", "rotated", "--dim", "5",
                "--param", "target_b=2.5", "--seed", "9", "--out", "report.json",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        std::fs::read(dir.path().join("report.json")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn nr_dump_emits_polyline() {
    let dir = tempfile::tempdir().unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .args(["nr-dump", "--t", "t.json", "--angles", "64", "--out", "b.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "re,im");
    assert_eq!(lines.len(), 1 + 64);
    // T = diag(1,2): numerical range is [1,2] on the real axis
    for line in &lines[1..] {
        let (re, im) = line.split_once(',').unwrap();
        let re: f64 = re.parse().unwrap();
        let im: f64 = im.parse().unwrap();
        assert!((1.0..=2.0).contains(&re) && im.abs() < 1e-12);
    }
}

#[test]
fn invalid_thread_env_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_json_pair(dir.path());
    let out = bin()
        .current_dir(dir.path())
        .env("ACCRETIVE_LAB_THREADS", "zero")
        .args(["verify", "--t", "t.json", "--a", "a.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .current_dir(dir.path())
        .env("ACCRETIVE_LAB_THREADS", "2")
        .args(["verify", "--t", "t.json", "--a", "a.json", "--out", "r.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn bad_b_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["sweep", "--b-grid", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
