use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn adlocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adlocal")).args(args).env_remove("ADLOCAL_SEED").output().unwrap()
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = adlocal(args);
    let value = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), value)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adlocal-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn without_elapsed(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("\"elapsed_ms\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn extract_all_small() {
    let (code, v) = report(&["extract-all", "--ring", "zmod:2", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["failures"], Value::Array(vec![]));
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 16);
    let e12: Value = serde_json::from_str(r#"[["0","1"],["0","0"]]"#).unwrap();
    assert!(v["witnesses"].as_array().unwrap().contains(&e12));
    assert_eq!(v["config"]["experiment"], "extract-all");
    assert_eq!(v["seed"], 0);
}

#[test]
fn non_commutative_base_exits_3_unless_forced() {
    let out = adlocal(&["extract-all", "--ring", "mat:zmod:2:2", "--n", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not commutative"));
    let out = adlocal(&["extract-all", "--ring", "mat:zmod:2:2", "--n", "2", "--force", "--witnesses", "3"]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
}

#[test]
fn lemma3_passes_on_m3_z2() {
    let (code, v) = report(&["lemma3", "--ring", "zmod:2", "--n", "3"]);
    assert_eq!(code, 0);
    // 4096 pairs, 6 ordered diagonal differences each
    assert_eq!(v["checks"], 4096 * 6);
}

#[test]
fn failures_exit_2_with_counterexamples() {
    let (code, v) = report(&["two-local-check", "--map", "identity"]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "fail");
    let first = &v["failures"][0];
    assert_eq!(first["check"], "two-local");
    assert_eq!(first["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_exit_3() {
    for args in [
        &["extract-all", "--ring", "zmod:0"][..],
        &["extract-all", "--n", "1"],
        &["extract-all", "--samples", "0"],
        &["no-such-experiment"],
        &["lemma3", "--ring", "poly:2"],
        &["extend-2local", "--n", "2"],
    ] {
        assert_eq!(adlocal(args).status.code(), Some(3), "{args:?}");
    }
    assert_eq!(adlocal(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_report_exits_4() {
    let path = scratch("missing-dir").join("nested").join("r.json");
    let out = adlocal(&["extract-all", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["extract-all", "--ring", "poly:2:2", "--n", "2", "--witnesses", "5", "--seed", "3"][..],
        &["prop10", "--ring", "zmod:3", "--n", "2", "--witnesses", "4", "--seed", "1"],
        &["extend-deriv", "--ring", "zmod:2", "--n", "3", "--witnesses", "2", "--pairs", "500"],
    ] {
        let a = scratch("a.json");
        let b = scratch("b.json");
        let mut first = args.to_vec();
        first.extend(["--json", a.to_str().unwrap()]);
        let mut second = args.to_vec();
        second.extend(["--json", b.to_str().unwrap()]);
        assert_eq!(adlocal(&first).status.code(), Some(0), "{args:?}");
        assert_eq!(adlocal(&second).status.code(), Some(0), "{args:?}");
        let (a, b) = (std::fs::read_to_string(a).unwrap(), std::fs::read_to_string(b).unwrap());
        assert_eq!(without_elapsed(&a), without_elapsed(&b), "{args:?}");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_adlocal"))
        .args(["extract-all", "--ring", "poly:2:2", "--witnesses", "2"])
        .env("ADLOCAL_SEED", "17")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 17);
    let (_, flag) = report(&["extract-all", "--ring", "poly:2:2", "--witnesses", "2", "--seed", "17"]);
    assert_eq!(v["witnesses"], flag["witnesses"]);
    let (_, other) = report(&["extract-all", "--ring", "poly:2:2", "--witnesses", "2", "--seed", "18"]);
    assert_ne!(v["witnesses"], other["witnesses"]);
}

#[test]
fn prop9_and_two_local_check_pass() {
    assert_eq!(report(&["prop9", "--ring", "zmod:2", "--n", "3"]).0, 0);
    assert_eq!(report(&["two-local-check", "--ring", "zmod:3", "--n", "2", "--witnesses", "4"]).0, 0);
    assert_eq!(report(&["lemma2", "--ring", "zmod:3", "--n", "2"]).0, 0);
}
