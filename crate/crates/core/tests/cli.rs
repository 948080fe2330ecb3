mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rashomon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rashomon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn meridian() -> String {
    common::fixture("meridian.json").display().to_string()
}

fn af(name: &str) -> String {
    common::fixture(&format!("af/{name}")).display().to_string()
}

fn write_variant(dir: &TempDir, edit: impl FnOnce(&mut Value)) -> String {
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(meridian()).unwrap()).unwrap();
    edit(&mut doc);
    let p = dir.path().join("scenario.json");
    fs::write(&p, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    p.display().to_string()
}

#[test]
fn encode_writes_graphs_and_report() {
    let dir = TempDir::new().unwrap();
    let o = rashomon(&[
        "encode",
        "--scenario",
        &meridian(),
        "--out",
        path(dir.path()),
        "--logical-clock",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for p in ["rel", "risk", "fin"] {
        let ttl = fs::read_to_string(dir.path().join(format!("{p}.ttl"))).unwrap();
        rashomon::kgstore::parse_turtle(&ttl).unwrap();
        assert!(dir.path().join(format!("{p}.tbox.ttl")).exists());
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["encoding"]["encoded"], 13);
    assert_eq!(report["encoding"]["relevance_checks"], 24);
    assert!(stdout(&o).contains("13"));
}

#[test]
fn query_prints_mode_and_grounded() {
    let dir = TempDir::new().unwrap();
    let o = rashomon(&[
        "query",
        "--scenario",
        &meridian(),
        "--query",
        "q3",
        "--out",
        path(dir.path()),
        "--logical-clock",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "mode: selection, grounded: {risk}");
    for ext in ["af", "dot", "explanation.txt", "outcome.json"] {
        assert!(dir.path().join(format!("q3.{ext}")).exists(), "q3.{ext}");
    }
}

#[test]
fn surfacing_query_lists_preferred_extensions() {
    let dir = TempDir::new().unwrap();
    let o = rashomon(&[
        "query",
        "--scenario",
        &meridian(),
        "--query",
        "q4",
        "--out",
        path(dir.path()),
        "--logical-clock",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(
        lines,
        [
            "mode: surfacing, grounded: {}",
            "preferred: {rel}",
            "preferred: {risk}",
            "preferred: {fin}"
        ]
    );
    let text = fs::read_to_string(dir.path().join("q4.explanation.txt")).unwrap();
    assert!(text.contains("Three strategic perspectives apply and they conflict."));
}

#[test]
fn unattacked_query_dot_has_three_accepted_nodes() {
    let dir = TempDir::new().unwrap();
    let o = rashomon(&[
        "query",
        "--scenario",
        &meridian(),
        "--query",
        "q2",
        "--out",
        path(dir.path()),
        "--logical-clock",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dot = fs::read_to_string(dir.path().join("q2.dot")).unwrap();
    assert_eq!(dot.matches("fillcolor=lightblue").count(), 3);
    assert_eq!(dot.matches("->").count(), 0);
    assert!(dot.trim_start().starts_with("digraph"));
}

#[test]
fn defeated_nodes_are_gray_with_edges() {
    let dir = TempDir::new().unwrap();
    rashomon(&[
        "query",
        "--scenario",
        &meridian(),
        "--query",
        "q3",
        "--out",
        path(dir.path()),
        "--logical-clock",
    ]);
    let dot = fs::read_to_string(dir.path().join("q3.dot")).unwrap();
    assert_eq!(dot.matches("fillcolor=lightblue").count(), 1);
    assert_eq!(dot.matches("fillcolor=gray85").count(), 2);
    assert_eq!(dot.matches("->").count(), 3);
}

#[test]
fn replay_passes_on_both_backends() {
    for name in ["meridian.json", "meridian_rules.json"] {
        let scenario = common::fixture(name).display().to_string();
        let o = rashomon(&["replay", "--scenario", &scenario, "--logical-clock"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn tampered_golden_fails_and_names_the_query() {
    let dir = TempDir::new().unwrap();
    let scenario = write_variant(&dir, |doc| {
        doc["expected"]["queries"]["q4"]["mode"] = serde_json::json!({"kind": "selection"});
    });
    let o = rashomon(&["replay", "--scenario", &scenario, "--logical-clock"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("q4"), "{err}");
    assert!(!err.contains("q3"), "{err}");
}

#[test]
fn replay_without_goldens_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write_variant(&dir, |doc| {
        doc.as_object_mut().unwrap().remove("expected");
    });
    let o = rashomon(&["replay", "--scenario", &scenario]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("expected"));
}

#[test]
fn solve_prints_extensions_in_declaration_order() {
    let o = rashomon(&["solve", &af("meridian_q4.af"), "--semantics", "preferred"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "rel\nrisk\nfin\n");

    let o = rashomon(&["solve", &af("meridian_q4.af")]);
    assert_eq!(stdout(&o), "\n");

    let o = rashomon(&["solve", &af("meridian_q3.af"), "--semantics", "grounded"]);
    assert_eq!(stdout(&o), "risk\n");

    let o = rashomon(&["solve", &af("meridian_q2.af")]);
    assert_eq!(stdout(&o), "rel risk fin\n");
}

#[test]
fn solve_reports_parse_errors_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.af");
    fs::write(&p, "af 2\na\nb\natt a c\n").unwrap();
    let o = rashomon(&["solve", path(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = TempDir::new().unwrap();
    let scenario = write_variant(&dir, |doc| {
        doc["observations"][2]["timestamp"] = Value::from("yesterday");
    });
    let o = rashomon(&["replay", "--scenario", &scenario]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("observations[2].timestamp"), "{}", stderr(&o));

    let scenario = write_variant(&dir, |doc| {
        doc["perspectives"][1]["backend"]["type"] = Value::from("oracle");
    });
    let o = rashomon(&["encode", "--scenario", &scenario, "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("perspectives[1]"), "{}", stderr(&o));
}

#[test]
fn zero_observations_is_not_an_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write_variant(&dir, |doc| {
        doc["observations"] = Value::Array(vec![]);
        doc.as_object_mut().unwrap().remove("expected");
    });
    let out = dir.path().join("out");
    let o = rashomon(&["encode", "--scenario", &scenario, "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = rashomon(&["query", "--scenario", &scenario, "--query", "q1", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("no perspective proposed"));
}

#[test]
fn unknown_query_fails() {
    let dir = TempDir::new().unwrap();
    let o = rashomon(&[
        "query",
        "--scenario",
        &meridian(),
        "--query",
        "q99",
        "--out",
        path(dir.path()),
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("q99"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(rashomon(&[]).status.code(), Some(2));
    assert_eq!(rashomon(&["solve"]).status.code(), Some(2));
}
