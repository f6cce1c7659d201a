use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corrint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrint")).args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("corrint-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = scratch("malformed");
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\n  \"schema\": 1,\n  \"name\": x\n}\n").unwrap();
    let out = corrint(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3, column 11"), "{}", stderr(&out));
}

#[test]
fn unknown_field_schema_and_verdict_exit_2() {
    let dir = scratch("invalid");
    let cases = [
        ("field", r#"{"schema": 1, "name": "a", "colour": 1, "operations": [{"run": {"rcd": {}}}]}"#, "colour"),
        ("schema", r#"{"schema": 9, "name": "a", "operations": [{"run": {"rcd": {}}}]}"#, "schema 9"),
        ("verdict", r#"{"schema": 1, "name": "a", "operations": [{"run": {"rcd": {}}, "expect": {"nope": true}}]}"#, "nope"),
    ];
    for (tag, text, needle) in cases {
        let path = dir.join(format!("{tag}.json"));
        std::fs::write(&path, text).unwrap();
        let out = corrint(&["run", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{tag}");
        assert!(stderr(&out).contains(needle), "{tag}: {}", stderr(&out));
    }
}

#[test]
fn capacity_exceeded_exits_3() {
    let out = corrint(&["necessity-demo", "--coincide", "--cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("6561"), "{}", stderr(&out));
}

#[test]
fn midpoint_absent_under_coinciding_algebras() {
    let out = corrint(&["necessity-demo", "--coincide", "--expect", "midpoint_absent=true"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&out)["operations"][0]["verdicts"]["midpoint_absent"], true);
}

#[test]
fn unmet_expectation_exits_1() {
    let out = corrint(&["necessity-demo", "--coincide", "--expect", "midpoint_absent=false"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
}

#[test]
fn bundled_nonconvexity_scenario_passes() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/03-e1-nonconvexity.json");
    let dir = scratch("bundled");
    let out = corrint(&["run", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let written: Vec<_> = std::fs::read_dir(&dir).unwrap().collect();
    assert_eq!(written.len(), 1);
}

#[test]
fn game_seeded_at_mean_splits_mass_evenly() {
    let out = corrint(&["game-equilibrium", "--start", "mean"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    let op = &r["operations"][0];
    assert_eq!(op["verdicts"]["converged"], true);
    assert_eq!(op["verdicts"]["at_mean"], true);
    let masses = op["result"].to_string();
    assert_eq!(masses.matches("\"1/3\"").count(), 3, "{masses}");
}

#[test]
fn convexity_demo_writes_decreasing_gaps() {
    let dir = scratch("plot");
    let out = corrint(&[
        "convexity-demo",
        "--k",
        "1",
        "--N",
        "1",
        "--L",
        "2",
        "--levels",
        "1..4",
        "--samples",
        "16",
        "--emit-plot-data",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.join("convexity-demo-0-convexity.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "gap").unwrap();
    let gaps: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
}

#[test]
fn reports_are_reproducible() {
    let a = corrint(&["lemma-bound", "--exponents", "3,4", "--trials", "20", "--seed", "5"]);
    let b = corrint(&["lemma-bound", "--exponents", "3,4", "--trials", "20", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
