use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scmp")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_check_render() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let svg = dir.path().join("plan.svg");
    let line = scenario("line4.json");
    let o = scmp(&["plan", "--scenario", &line, "--out", s(&sol), "--svg", s(&svg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("success=true"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let o = scmp(&["check", "--scenario", &line, "--solution", s(&sol)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("OK:"));

    let again = dir.path().join("again.svg");
    let o = scmp(&["render", "--scenario", &line, "--solution", s(&sol), "--out", s(&again), "--snapshots", "0,10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&again).unwrap().matches("class=\"footprint").count(), 2 * 5);
}

#[test]
fn check_names_the_broken_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let line = scenario("line4.json");
    assert_eq!(code(&scmp(&["plan", "--scenario", &line, "--out", s(&sol)])), 0);

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let record = &mut doc["agents"][1]["records"][20];
    let x = record[1].as_f64().unwrap();
    record[1] = serde_json::json!(x + 0.05);
    std::fs::write(&sol, serde_json::to_string(&doc).unwrap()).unwrap();

    let o = scmp(&["check", "--scenario", &line, "--solution", s(&sol)]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("agent 1"), "{out}");
}

#[test]
fn bench_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = scmp(&["bench", "--out", s(&out), "--count", "2", "--seed", "7", "--sequential", "--time-limit", "30"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (stdout(&o), std::fs::read(&out).unwrap())
    };
    let (table_a, a) = run("a.json");
    let (table_b, b) = run("b.json");
    assert_eq!(a, b);
    assert_eq!(table_a, table_b);
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["first_seed"], 7);
    assert_eq!(report["runs"][1]["seed"], 8);
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    assert_eq!(code(&scmp(&["plan", "--bogus"])), 2);
    assert_eq!(code(&scmp(&["plan", "--scenario", "/nonexistent.json", "--out", s(&out)])), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"map": {"width": 10.0, "height": 10.0}}"#).unwrap();
    let o = scmp(&["plan", "--scenario", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.json"), "{}", stderr(&o));

    let line = scenario("line4.json");
    let o = scmp(&["plan", "--scenario", &line, "--out", s(&out), "--config-override", "no_such_key=1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no_such_key"));
}

#[test]
fn exhausted_budget_exits_1_with_failure_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let o = scmp(&["plan", "--scenario", &scenario("line4.json"), "--out", s(&out), "--node-budget", "1"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["metrics"]["success"], false);
    assert!(doc["error"].is_string());
}

#[test]
fn config_override_reaches_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let o = scmp(&[
        "plan", "--scenario", &scenario("line4.json"), "--out", s(&out), "--config-override", "seed=99", "--emit-runtime",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 99);
    assert!(doc["metrics"]["runtime_s"].is_number());
}
