//! End-to-end runs of the `bergman` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn sample() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample.json")
}

fn bergman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergman")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bergman-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_leading_block_on_sample() {
    let out = tmp("thm1.json");
    let o = bergman(&["verify-thm1", "--j", "1", "--input", sample().to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("trace identity"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["match"], true);
    assert_eq!(v["verdict"], "matches leading block");
}

#[test]
fn vanishing_block() {
    let out = tmp("vanish.json");
    let o = bergman(&["compute", "--j", "1", "--r", "1", "--input", sample().to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["verdict"].as_str().unwrap().contains("vanishes"));
    let zero = v["block"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).all(|x| x.as_array().unwrap().is_empty());
    assert!(zero);
}

#[test]
fn enumerate_counts() {
    let o = bergman(&["enumerate", "--r", "2", "--j", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("r=2: 12 descriptors"), "{s}");
    assert!(s.contains("retained for j=1: 1"), "{s}");
    assert!(s.contains("r=(2,2) η=(N⊥,N,N⊥)"), "{s}");
}

#[test]
fn second_coefficient_rank_one() {
    let o = bergman(&["verify-thm2", "--j", "1", "--input", sample().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("families I:+ II:+ III:−"));
}

#[test]
fn second_coefficient_rank_two_needs_ordered_placement() {
    let base = ["verify-thm2", "--j", "1", "--n", "2", "--rank", "2", "--seed", "3", "--density", "0.7"];
    let printed = bergman(&base);
    assert_eq!(printed.status.code(), Some(1), "{}", stdout(&printed));
    let mut args = base.to_vec();
    args.push("--ordered-iii");
    let ordered = bergman(&args);
    assert_eq!(ordered.status.code(), Some(0), "{}", stdout(&ordered));
}

#[test]
fn oracle_agrees() {
    let o = bergman(&["oracle", "--j", "0", "--r", "1", "--n", "2", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("oracle: cutoffs"));
    let o = bergman(&["compute", "--j", "1", "--r", "3", "--n", "2", "--seed", "4", "--with-oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tmp("a.json");
    let b = tmp("b.json");
    for p in [&a, &b] {
        let o = bergman(&["compute", "--j", "1", "--r", "3", "--n", "3", "--seed", "17", "--output", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn unavailable_operator_exit_code() {
    let o = bergman(&["compute", "--j", "0", "--r", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn invalid_inputs_exit_code() {
    let bad_schema = tmp("schema.json");
    std::fs::write(&bad_schema, r#"{"schema_version":2,"n":2,"rank":1}"#).unwrap();
    assert_eq!(bergman(&["compute", "--r", "2", "--input", bad_schema.to_str().unwrap()]).status.code(), Some(2));

    let asym = tmp("asym.json");
    std::fs::write(&asym, r#"{"schema_version":1,"n":2,"rank":1,"RE_anti":[{"index":[1,2],"matrix":[[["1","0"]]]}]}"#).unwrap();
    let strict = bergman(&["compute", "--r", "2", "--strict", "--input", asym.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("antisymmetry"));
    let lenient = bergman(&["compute", "--r", "2", "--input", asym.to_str().unwrap()]);
    assert_eq!(lenient.status.code(), Some(0));

    assert_eq!(bergman(&["compute", "--r", "2", "--input", "/nonexistent/data.json"]).status.code(), Some(2));
}

#[test]
fn latex_output() {
    let o = bergman(&["compute", "--j", "1", "--r", "2", "--input", sample().to_str().unwrap(), "--latex"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\\begin{pmatrix}"));
}
