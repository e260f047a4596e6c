use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BELL: &str = r#"{"dims":[2,2],"re":[0.7071067811865476,0,0,0.7071067811865476]}"#;
const CNOT: &str = r#"{"dims":[2,2],"re":[1,0,0,0, 0,1,0,0, 0,0,0,1, 0,0,1,0]}"#;

fn sepkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepkit"))
        .args(args)
        .env_remove("SEPKIT_SEED")
        .env_remove("SEPKIT_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn schmidt_of_bell_state() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.json", BELL);
    let out = sepkit(&["schmidt", "--input", &f]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = r["result"]["coefficients"].as_array().unwrap();
    assert_eq!(c.len(), 2);
    for a in c {
        assert!((a.as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }
    assert_eq!(r["status"], "ok");
}

#[test]
fn cnot_is_not_a_product_preserver() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "cnot.json", CNOT);
    let out = sepkit(&["classify", "preserver", "--input", &f, "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "violation");
}

#[test]
fn k_out_of_range_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "x.json", r#"{"dims":[3,3],"re":[1,0,0,0,0,0,0,0,0]}"#);
    let out = sepkit(&["norm", "--input", &f, "--k", "5"]);
    assert_eq!(out.status.code(), Some(4));
    let err = report(&out)["error"].as_str().unwrap().to_string();
    assert!(err.contains("k out of range"), "{err}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("k out of range"));
}

#[test]
fn malformed_input_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"dims":[2,2],"re":[1,0,0]}"#);
    let out = sepkit(&["schmidt", "--input", &f]);
    assert_eq!(out.status.code(), Some(4));
    assert!(report(&out)["error"].as_str().unwrap().contains("re"));

    let f = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(sepkit(&["schmidt", "--input", &f]).status.code(), Some(4));
    assert_eq!(sepkit(&["schmidt", "--input", "/no/such/file"]).status.code(), Some(4));
}

#[test]
fn unknown_flag_exits_with_input_code() {
    assert_eq!(sepkit(&["schmidt", "--bogus"]).status.code(), Some(4));
    assert_eq!(sepkit(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "cnot.json", CNOT);
    let args = ["norm", "--input", &f, "--k", "1", "--restarts", "5", "--oracle-samples", "500", "--seed", "9"];
    let a = sepkit(&args);
    let b = sepkit(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.json", BELL);
    let o = dir.path().join("r.json");
    let out = sepkit(&["gme", "--input", &f, "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&o).unwrap()).unwrap();
    assert!((r["result"]["e"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn environment_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.json", BELL);
    let out = Command::new(env!("CARGO_BIN_EXE_sepkit"))
        .args(["schmidt", "--input", &f])
        .env("SEPKIT_SEED", "42")
        .env("SEPKIT_TOL", "1e-6")
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["seed"], 42);
    assert_eq!(r["tolerances"]["tol"].as_f64(), Some(1e-6));

    let out = sepkit(&["schmidt", "--input", &f]);
    assert_eq!(report(&out)["seed"], 0);
}

#[test]
fn small_search_finds_no_candidates() {
    let out = sepkit(&["search", "--question", "multipartite-k", "--shape", "2,2,2", "--k", "1", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["candidates"].as_array().unwrap().len(), 0);

    let out = sepkit(&["search", "--question", "rank-r-bipartite", "--shape", "2,2,2", "--k", "1", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn recover_rejects_cnot_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "cnot.json", CNOT);
    let out = sepkit(&["recover", "--input", &f]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report(&out)["result"]["witness"].is_object());
}

#[test]
fn identity_superoperator_is_an_isometry() {
    let dir = tempfile::tempdir().unwrap();
    let re: Vec<String> = (0..256).map(|i| if i % 17 == 0 { "1" } else { "0" }.to_string()).collect();
    let body = format!(r#"{{"kind":"superop","dims":[2,2],"re":[{}]}}"#, re.join(","));
    let f = write(dir.path(), "id.json", &body);
    let out = sepkit(&["classify", "isometry", "--input", &f, "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["isometry"], true);
    let out = sepkit(&["classify", "cp", "--input", &f, "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
}
