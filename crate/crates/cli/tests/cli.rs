use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    root.join(name).to_string_lossy().into_owned()
}

fn optest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optest"))
        .args(args)
        .env_remove("OPTEST_TOL_SLACK")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn validate_trine_fixture() {
    let out = optest(&["validate", "--pom", &fixture("trine.json")]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["results"]["passed"], true);
    assert_eq!(report["results"]["outcomes"], 3);
}

#[test]
fn invalid_pom_exits_with_validation_code() {
    let out = optest(&["validate", "--pom", &fixture("incomplete.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("completeness"));
}

#[test]
fn epr_scenario_lhs_is_half() {
    let out = optest(&["scenario", "epr", "--params", r#"{"sigma":0.1,"tau":0.1}"#]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let lhs = report["results"]["results"]["closed_form"]["ungen_lhs"].as_f64().unwrap();
    assert!((lhs - 0.5).abs() < 1e-12);
    assert_eq!(report["scenario"], "epr");
}

#[test]
fn suite_passes_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = optest(&["suite", "--seed", "0", "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(report["seed"], 0);
    assert_eq!(report["generator"], "ChaCha8");
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 2, "no temporary files left behind");
}

#[test]
fn csv_format_has_fixed_columns() {
    let out = optest(&["scenario", "spin", "--format", "csv", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "scenario,relation_id,lhs,rhs,slack,saturated,tolerance");
    assert!(lines.all(|l| l.starts_with("spin,")));
}

#[test]
fn estimate_and_relations_from_files() {
    let est = optest(&["estimate", "--pom", &fixture("trine.json"), "--params", &format!("@{}", fixture("estimate_qubit.json"))]);
    assert_eq!(est.status.code(), Some(0));
    let report = stdout_json(&est);
    assert_eq!(report["results"]["estimator"]["meta"]["kind"], "optimal-with-state");

    let rel = optest(&["relations", "--pom", &fixture("trine.json"), "--params", &format!("@{}", fixture("relations_qubit.json"))]);
    assert_eq!(rel.status.code(), Some(0));
    let ids: Vec<String> = stdout_json(&rel)["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["relation_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["varsum", "varsum", "geom", "accbound", "accbound", "ungen"]);
}

#[test]
fn violated_relation_exits_with_one() {
    // A negative slack allowance demands a margin no instance provides.
    let out = optest(&[
        "relations",
        "--pom",
        &fixture("trine.json"),
        "--params",
        &format!("@{}", fixture("relations_qubit.json")),
        "--tolerances",
        r#"{"slack": -10.0}"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("violated"));
}

#[test]
fn config_errors_exit_with_three() {
    let bad_json = optest(&["scenario", "epr", "--params", "{\"sigma\": 0.1,\n\"tau\": }"]);
    assert_eq!(bad_json.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad_json.stderr).contains("line 2"));

    let unknown = optest(&["scenario", "thermal", "--params", r#"{"betaz": [1.0]}"#]);
    assert_eq!(unknown.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("betaz"));

    let missing = optest(&["validate", "--pom", "/nonexistent/pom.json"]);
    assert_eq!(missing.status.code(), Some(3));

    let env = Command::new(env!("CARGO_BIN_EXE_optest"))
        .args(["scenario", "linear"])
        .env("OPTEST_TOL_SLACK", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(3));
}

#[test]
fn env_tolerance_is_recorded() {
    let out = Command::new(env!("CARGO_BIN_EXE_optest"))
        .args(["scenario", "linear"])
        .env("OPTEST_TOL_SLACK", "1e-7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["tolerances"]["slack"], 1e-7);
}
