use std::process::Command;

use serde_json::Value;

fn charlap(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_charlap"))
        .args(args)
        .env("CHARLAP_THREADS", "2")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn audit_reports_bracket_generation() {
    let (code, out, _) = charlap(&["audit", "involutive-product"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"][1]["data"]["bracket_generating"], false);
    let (code, out, _) = charlap(&["audit", "real-heisenberg-contact"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"][1]["data"]["step"], 2);
}

#[test]
fn symbol_matches_closed_form() {
    for op in ["dq", "dqstar", "lapq"] {
        let (code, out, err) = charlap(&[
            "symbol", "real-heisenberg-contact", "--op", op, "--point", "0.1,-0.2,0.3", "--xi", "0.5,-1,0.25",
        ]);
        assert_eq!(code, 0, "{op}: {err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["symbol"]["residual"].as_f64().unwrap() < 1e-8);
        assert_eq!(v["symbol"]["oracle"].as_array().unwrap().len(), 8);
    }
    let (code, out, err) = charlap(&[
        "symbol", "complex-heisenberg-standard", "--op", "obstruction",
        "--point", "0.1,0.2,-0.3,0.05,0.4,-0.1", "--xi", "1,0,0.5,-0.25,0,2",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["symbol"]["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn symbol_needs_a_complex_scenario_for_the_obstruction() {
    let (code, _, err) = charlap(&["symbol", "flat-torus", "--op", "obstruction", "--point", "0,0", "--xi", "1,0"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
}

#[test]
fn single_checks_exit_by_verdict() {
    assert_eq!(charlap(&["kaehler", "flat-kaehler"]).0, 0);
    assert_eq!(charlap(&["kaehler", "nonkaehler-hermitian"]).0, 0);
    // not applicable: the distribution is proper
    assert_eq!(charlap(&["kaehler", "complex-heisenberg-standard"]).0, 1);
    assert_eq!(charlap(&["identity", "complex-heisenberg-invariant"]).0, 0);
    let (code, out, _) = charlap(&["obstruct", "complex-heisenberg-invariant"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"][0]["data"]["verdict"]["bigrading_preserved"], false);
}

#[test]
fn witness_builds_and_verifies() {
    let (code, out, _) = charlap(&["witness", "real-heisenberg-contact", "--trials", "4", "--nodes", "64"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["witness"]["kind"], "real-degree1");
    assert_eq!(v["verification"]["nodes"], 64);
    assert!(v["verification"]["max_pairing"].as_f64().unwrap() < 1e-6);
    let (code, _, err) = charlap(&["witness", "real-heisenberg-contact", "--kind", "complex-degree2-standard"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(charlap(&["witness", "flat-torus"]).0, 2);
}

#[test]
fn report_writes_the_same_file_twice() {
    let dir = std::env::temp_dir().join(format!("charlap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for p in [&a, &b] {
        let (code, out, err) = charlap(&["report", "pfaff-chart", "--seed", "7", "--trials", "4", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        assert!(out.is_empty());
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let v: Value = serde_json::from_str(&ta).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["passed"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_scenario_is_an_error() {
    let (code, _, err) = charlap(&["audit", "no-such-scenario"]);
    assert_eq!(code, 2);
    assert!(err.contains("no-such-scenario"));
}
