//! End-to-end behavior of the `cosob` binary: exit codes, report files, and
//! byte-identical output across thread counts.

use std::process::Command;

fn cosob() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosob"))
}

fn write_scenario(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn schema_violation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_scenario(
        tmp.path(),
        "bad.json",
        r#"{"schema": 1, "id": "bad", "checks": [
            {"kind": "energy",
             "family": {"id": "hedgehog", "m": 3},
             "order": 1, "exponent": 2.0,
             "quadrature": {"domain": {"kind": "ball", "radius": 1.0, "m": 3},
                            "n_annuli": 0, "radial_nodes": 4, "angular_nodes": 4},
             "expect": "finite"}]}"#,
    );
    let status = cosob()
        .arg("run")
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_field_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_scenario(
        tmp.path(),
        "unknown.json",
        r#"{"schema": 1, "id": "x", "checks": [], "mystery": 1}"#,
    );
    let status = cosob().arg("run").arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn empty_check_list_exits_0_with_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write_scenario(
        tmp.path(),
        "empty.json",
        r#"{"schema": 1, "id": "empty", "checks": []}"#,
    );
    let out = tmp.path().join("out");
    let status = cosob()
        .arg("run")
        .arg(&empty)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "only the header row");
}

#[test]
fn failing_expectation_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // hedgehog first-order energy on the 3-ball is genuinely finite;
    // expecting divergent must fail with exit 1
    let wrong = write_scenario(
        tmp.path(),
        "wrong.json",
        r#"{"schema": 1, "id": "wrong", "checks": [
            {"kind": "energy",
             "family": {"id": "hedgehog", "m": 3},
             "order": 1, "exponent": 2.0,
             "quadrature": {"domain": {"kind": "ball", "radius": 1.0, "m": 3},
                            "n_annuli": 10, "radial_nodes": 4, "angular_nodes": 4},
             "expect": "divergent"}]}"#,
    );
    let status = cosob()
        .arg("run")
        .arg(&wrong)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn run_reports_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join("c04_strict_inclusion.json");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("out{threads}"));
        let status = cosob()
            .arg("run")
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .arg("--threads")
            .arg(threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        let json = std::fs::read(out.join("report.json")).unwrap();
        let csv = std::fs::read(out.join("report.csv")).unwrap();
        outputs.push((json, csv));
    }
    assert_eq!(outputs[0], outputs[1], "reports differ across thread counts");
}

#[test]
fn generic_checks_and_scenario_out_field_work() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("from-scenario");
    let text = format!(
        r#"{{"schema": 1, "id": "generic", "out": {out:?}, "checks": [
            {{"kind": "oscillation",
             "family": {{"id": "hedgehog", "m": 3}},
             "quadrature": {{"domain": {{"kind": "ball", "radius": 1.0, "m": 3}},
                            "n_annuli": 4, "radial_nodes": 2, "angular_nodes": 6}},
             "expect": {{"value": {{"value": 3.141592653589793, "tol": 1e-9}}}}}},
            {{"kind": "gn_ratio",
             "family": {{"id": "geodesic_wind", "ell": 3}},
             "k": 2, "j": 1, "p": 1.0,
             "quadrature": {{"domain": {{"kind": "circle", "radius": 1.0}},
                            "n_annuli": 4, "radial_nodes": 2, "angular_nodes": 16}},
             "expect": "ratio_infinite"}}
        ]}}"#,
        out = out_dir.to_string_lossy()
    );
    let scenario = write_scenario(tmp.path(), "generic.json", &text);
    // no --out: the scenario's own out field decides
    let status = cosob().arg("run").arg(&scenario).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("report.csv").exists());
}

#[test]
fn norm_compose_and_energy_subcommands_work() {
    let status = cosob()
        .args(["norm-compose", "--random", "200", "--seed", "3"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let output = cosob()
        .args([
            "energy",
            "--family",
            "radial_power",
            "--alpha",
            "2.0",
            "--m",
            "5",
            "--order",
            "1",
            "--exponent",
            "2.0",
            "--annuli",
            "10",
            "--radial-nodes",
            "4",
            "--angular-nodes",
            "4",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("\"classification\": \"divergent\""), "{text}");
}
