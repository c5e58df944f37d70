use std::process::{Command, Output};

use psboson_cli::{run, CommandKind, RunConfig};
use serde_json::Value;

fn psboson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psboson")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn quantity(doc: &Value, name: &str) -> f64 {
    doc["tables"]["theorem1"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r[0] == name)
        .and_then(|r| r[1].as_f64())
        .unwrap()
}

#[test]
fn spectrum_table_contains_e23() {
    let out = psboson(&["spectrum", "--beta", "0.5", "--gamma", "0.75", "--m-max", "3", "--n-max", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["schema"], "1");
    assert_eq!(doc["command"], "spectrum");
    let rows = doc["tables"]["spectrum"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let e23 = rows.iter().find(|r| r[0] == 2 && r[1] == 3).unwrap();
    assert_eq!(e23[2].as_f64().unwrap(), 7.0);
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_all_passes_with_defaults() {
    let out = psboson(&["verify-all"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    let suites: Vec<&str> =
        doc["tables"]["summary"]["rows"].as_array().unwrap().iter().map(|r| r[0].as_str().unwrap()).collect();
    assert_eq!(suites, ["commutators", "spectrum", "biorth", "emm", "sectors", "stability", "theorem1"]);
    for row in doc["tables"]["summary"]["rows"].as_array().unwrap() {
        assert_eq!(row[4], true, "{row}");
    }
}

#[test]
fn theorem1_from_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("m.json");
    std::fs::write(&j, r#"{"n": 2, "re": [[1, 1], [0, 2]], "im": [[0, 0], [0, 0]]}"#).unwrap();
    let c = dir.path().join("m.csv");
    std::fs::write(&c, "1,0,1,0\n0,0,2,0\n").unwrap();
    for path in [&j, &c] {
        let out = psboson(&["theorem1", "--input", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let doc = json(&out);
        assert!(quantity(&doc, "unitarity_defect") > 1.0);
        assert!(quantity(&doc, "similarity_error") <= 1e-12);
        let s: Vec<f64> =
            doc["tables"]["s"]["rows"].as_array().unwrap().iter().map(|r| r[2].as_f64().unwrap()).collect();
        assert_eq!(s, [1.0, -1.0, -1.0, 2.0]);
    }
}

#[test]
fn complex_spectrum_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rot.csv");
    std::fs::write(&path, "0,0,-1,0\n1,0,0,0\n").unwrap();
    let out = psboson(&["theorem1", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not real"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(psboson(&["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(psboson(&["sectors", "--k-range", "3:1"]).status.code(), Some(2));
    assert_eq!(psboson(&["theorem1", "--input", "/definitely/missing.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 2, "re": [[1]]}"#).unwrap();
    assert_eq!(psboson(&["theorem1", "--input", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn tolerance_failure_names_the_check() {
    let out = psboson(&["commutators", "--trunc", "6", "--tol-algebra", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("check failed: [c,c‡]-1"), "{err}");
    assert_eq!(check(&json(&out), "[c,c‡]-1")["pass"], false);
}

#[test]
fn output_is_deterministic() {
    let args = ["sectors", "--depth", "30", "--k-range", "-1:1", "--union-trunc", "6"];
    let a = psboson(&args);
    let b = psboson(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = psboson(&[
        "stability",
        "--lambda",
        "1.2",
        "--depths",
        "40,80",
        "--k-range",
        "0:0",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,lambda,depth,lowest,target");
    assert_eq!(lines.len(), 3);
    let lowest: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(lowest[0] - lowest[1] > 1.0);
    assert!(lines[1].ends_with(','));
}

#[test]
fn stable_scan_reaches_limit() {
    let out = psboson(&["stability", "--lambda", "0.6", "--depths", "20,40,60", "--k-range", "0:0"]);
    assert!(out.status.success());
    let doc = json(&out);
    let c = check(&doc, "k=0 lowest→target");
    assert!(c["value"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn library_entry_point() {
    let cfg = RunConfig { command: CommandKind::Emm, beta: -0.3, gamma: 2.0, ..RunConfig::default() };
    let report = run(&cfg).unwrap();
    assert!(report.first_failure().is_none());
    assert_eq!(report.tables[0].rows.len(), 4);
    let neg = RunConfig { gamma: -1.0, ..cfg };
    assert!(run(&neg).is_err());
}
