use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    dir.join(name).to_string_lossy().into_owned()
}

fn chrcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chrcp"))
        .args(args)
        .env("CHRCP_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_prints_the_final_store_on_both_engines() {
    let prog = corpus("pivot_swap.chrcp");
    let store = corpus("pivot_swap.store");
    let op = chrcp(&["run", &prog, "--store", &store]);
    let abs = chrcp(&["run", &prog, "--store", &store, "--engine", "abs"]);
    assert_eq!(
        op.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&op.stderr)
    );
    assert_eq!(abs.status.code(), Some(0));
    assert!(stdout(&op).starts_with('{'));
    assert_eq!(stdout(&op), stdout(&abs));
}

#[test]
fn run_exits_2_on_the_step_limit() {
    let out = chrcp(&[
        "run",
        &corpus("pairs.chrcp"),
        "--store",
        &corpus("pairs.store"),
        "--engine",
        "abs",
        "--max-steps",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_a_json_lines_trace() {
    let dir = std::env::temp_dir().join(format!("chrcp-cli-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.jsonl");
    let out = chrcp(&[
        "run",
        &corpus("relabel.chrcp"),
        "--store",
        &corpus("relabel.store"),
        "--trace",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in [
            "index",
            "kind",
            "goalDigest",
            "storeBefore",
            "storeAfter",
            "classification",
        ] {
            assert!(v.get(key).is_some(), "missing {key} in {line}");
        }
        assert_ne!(v["classification"], "violation");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_json_lists_predicates_and_body_patterns() {
    let out = chrcp(&["analyze", &corpus("pivot_swap.chrcp"), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let preds = v["predicates"].as_array().unwrap();
    assert!(!preds.is_empty());
    assert!(preds
        .iter()
        .all(|p| p["monotone"].is_boolean() && p["arity"].is_u64()));
    assert!(v["body_patterns"].is_array());
}

#[test]
fn check_reports_ok() {
    let out = chrcp(&[
        "check",
        &corpus("remove_non_min.chrcp"),
        "--store",
        &corpus("remove_non_min.store"),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn fuzz_small_range_is_clean() {
    let out = chrcp(&["fuzz", "--seeds", "0..16", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["runs"], 16);
    assert_eq!(v["ok_runs"], 16);
}

#[test]
fn fuzz_without_maximality_finds_violations() {
    let out = chrcp(&["fuzz", "--seeds", "0..200", "--no-maximality"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("VIOLATIONS"));
}

#[test]
fn parse_errors_exit_1_with_a_location() {
    let dir = std::env::temp_dir().join(format!("chrcp-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.chrcp");
    std::fs::write(&path, "r @ a(X) <=> \n").unwrap();
    let out = chrcp(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.starts_with("error:") && err.contains("bad.chrcp:"),
        "{err}"
    );
    std::fs::remove_dir_all(&dir).ok();
}
