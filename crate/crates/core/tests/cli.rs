//! End-to-end tests of the `aklab` binary: exit codes, golden text reports
//! and agreement between the text and JSON renderings.

use std::path::PathBuf;
use std::process::{Command, Output};

use aklab::oracle::{build_grover, to_json};
use serde_json::Value;

fn aklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aklab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn ok(args: &[&str]) -> String {
    let out = aklab(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).expect("valid json")
}

#[test]
fn predict_grover_two_golden() {
    let expected = "\
problem                   grover:n=2
family                    linear
complementary             true
baseline queries          3
predicted queries         1
half-split formula        1  (2^(n/2) - 1)
optimal reference         2  (ceil(pi/4 * 2^(n/2)))
no R=1/2 instance         none

setting    pairs  instances  costs
00             3          3  1x3
01             3          3  1x3
10             3          3  1x3
11             3          3  1x3
";
    assert_eq!(ok(&["predict", "--problem", "grover:n=2"]), expected);
}

#[test]
fn simulate_dj_constant_golden() {
    let expected = "\
problem: dj:n=2
setting: 0000
circuit: H_A -> U_f -> H_A
A outcome distribution:
  00  1.000000
";
    assert_eq!(
        ok(&["simulate", "--problem", "dj:n=2", "--setting", "0000"]),
        expected
    );
}

#[test]
fn simulate_grover_prepared_pairs() {
    let text = ok(&["simulate", "--problem", "grover:n=2", "--prepare-not"]);
    for pair in [
        "(00, 11)  0.250000",
        "(01, 10)  0.250000",
        "(10, 01)  0.250000",
        "(11, 00)  0.250000",
    ] {
        assert!(text.contains(pair), "missing {pair} in\n{text}");
    }
}

#[test]
fn simulate_stage_trace_has_every_boundary() {
    let doc = json(&[
        "simulate",
        "--problem",
        "grover:n=2",
        "--setting",
        "10",
        "--stages",
        "--format",
        "json",
    ]);
    let labels: Vec<&str> = doc["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["input", "H_A", "U_f", "Inv_A"]);
    assert_eq!(doc["distribution"][0]["outcome"], "10");
    assert_eq!(doc["distribution"][0]["probability"], 1.0);
}

#[test]
fn ak_simon_json_matches_text() {
    let args = ["ak", "--problem", "simon:n=2", "--setting", "0011"];
    let doc = json(&[&args[..], &["--format", "json"]].concat());
    let pairs = doc["pairs"].as_array().unwrap();
    let instances = doc["instances"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    assert_eq!(instances.len(), 4);
    for inst in instances {
        assert_eq!(inst["epsilon"], 0.584963);
    }
    let text = ok(&args);
    assert!(text.contains("occam pairs: 2"));
    assert!(text.contains("instances: 4"));
    assert_eq!(text.matches("eps_A = 0.584963").count(), 2 + 4);
}

#[test]
fn predict_json_matches_text() {
    let doc = json(&["predict", "--problem", "dj:n=2", "--format", "json"]);
    assert_eq!(doc["baseline"], 3);
    assert_eq!(doc["predicted"], 1);
    assert_eq!(doc["family"], "cells");
    let text = ok(&["predict", "--problem", "dj:n=2"]);
    assert!(text.contains("baseline queries          3"));
    assert!(text.contains("predicted queries         1"));
    let counts: Vec<u64> = doc["per_setting"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["pairs"].as_u64().unwrap())
        .collect();
    // constant tables admit three complementary splits, balanced ones one
    assert_eq!(counts, [3, 1, 1, 1, 1, 1, 1, 3]);
}

#[test]
fn predict_odd_grover_is_labelled() {
    let text = ok(&["predict", "--problem", "grover:n=3"]);
    assert!(text.contains("predicted queries         none"));
    assert!(text.contains("no exact R=1/2 split at odd n"));
    assert!(text.contains("extrapolated split"));
}

#[test]
fn histories_formats() {
    let text = ok(&["histories", "--problem", "grover:n=2", "--setting", "01"]);
    assert!(text.contains("histories: 16"));
    assert!(text.contains("00|0 -> 11|0 -> 11|0 -> 01|0"));

    let lines = ok(&[
        "histories",
        "--problem",
        "grover:n=2",
        "--setting",
        "01",
        "--v-branch",
        "both",
        "--format",
        "json",
    ]);
    let parsed: Vec<Value> = lines
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(parsed.len(), 32);
    assert!(parsed.iter().all(|h| h["consistent"].is_array()));

    let dot = ok(&[
        "histories",
        "--problem",
        "dj:n=2",
        "--setting",
        "0011",
        "--format",
        "dot",
    ]);
    assert!(dot.starts_with("digraph histories {"));
    assert!(dot.trim_end().ends_with('}'));
}

#[test]
fn verify_passes() {
    let text = ok(&["verify"]);
    assert!(!text.contains("FAIL"));
    assert!(text.trim_end().ends_with("7 passed, 0 failed"));
    let doc = json(&["verify", "--format", "json"]);
    assert_eq!(doc["failed"], 0);
}

#[test]
fn file_selector_loads_documents() {
    let path: PathBuf =
        std::env::temp_dir().join(format!("aklab-grover-{}.json", std::process::id()));
    std::fs::write(&path, to_json(&build_grover(2).unwrap())).unwrap();
    let selector = format!("file:{}", path.display());
    let from_file = ok(&["predict", "--problem", &selector]);
    let built_in = ok(&["predict", "--problem", "grover:n=2"]);
    // only the problem name line may differ
    let tail = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(tail(&from_file), tail(&built_in));
    std::fs::remove_file(&path).ok();
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| aklab(args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(
        code(&["ak", "--problem", "grover:n=2"]),
        Some(2),
        "setting is required"
    );
    assert_eq!(
        code(&["ak", "--problem", "grover:n=2", "--setting", "0101"]),
        Some(2)
    );
    assert_eq!(code(&["predict", "--problem", "grover"]), Some(2));
    assert_eq!(
        code(&["predict", "--problem", "grover:n=2", "--retroaction", "2/3"]),
        Some(2)
    );
    assert_eq!(
        code(&["predict", "--problem", "file:/nonexistent/problem.json"]),
        Some(2)
    );
    assert_eq!(
        code(&["predict", "--problem", "grover:n=7"]),
        Some(1),
        "enumeration limit"
    );
    assert_eq!(
        code(&["simulate", "--problem", "grover:n=4"]),
        Some(2),
        "no circuit"
    );
    assert_eq!(code(&["verify", "--format", "dot"]), Some(2));
}
