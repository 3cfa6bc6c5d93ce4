use std::path::PathBuf;
use std::process::{Command, Output};

use glbrown::harness::read_csv;

fn glbrown(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glbrown")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("glbrown-cli-{}-{name}", std::process::id()))
}

#[test]
fn limit_prints_value_and_realness() {
    let out = glbrown(&["limit", "--word", "1 1 1* 1*", "--t", "1", "--r", "0.5", "--s", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.lines().next().unwrap().split_whitespace().nth(2).unwrap().parse().unwrap();
    let expect = 2f64.exp() + 0.5 * 1.5 * 4.0 * 1f64.exp();
    assert!((value - expect).abs() < 1e-10, "{value} vs {expect}");
    assert!(text.contains("pass"));
}

#[test]
fn process_moment_reports_both_routes() {
    let out = glbrown(&["process-moment", "--word", "1.0 2.0*", "--r", "0.5", "--s", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.lines().next().unwrap().split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((value - 1f64.exp()).abs() < 1e-10);
    assert!(text.contains("route A - route B"));
}

#[test]
fn simulate_writes_csv_and_json() {
    let config = scratch("exp.json");
    let csv = scratch("out.csv");
    let json = scratch("out.json");
    std::fs::write(
        &config,
        r#"{"sim": {"r": 0.5, "s": 0.5, "N": 3, "times": [0.5, 1.0], "dt": 0.05, "seed": 1, "paths": 40},
            "words": ["0.5", "0.5 1.0*"], "compare_to": "finiteN"}"#,
    )
    .unwrap();
    let run = |seed: &str| {
        let out = glbrown(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--csv",
            csv.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&csv).unwrap()
    };
    let first = run("11");
    assert_eq!(first, run("11"));
    let rows = read_csv(first.as_slice()).unwrap();
    assert_eq!(rows.iter().filter(|r| r.name == "moment").count(), 2);
    assert_eq!(rows.iter().filter(|r| r.name == "cov").count(), 3);
    assert!(rows.iter().filter(|r| r.name == "moment").all(|r| r.ref_re.is_some() && r.se.is_some()));
    let mirrored: Vec<glbrown::harness::ReportRow> = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(mirrored, rows);
    for p in [config, csv, json] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn publication_requires_seed() {
    let out = glbrown(&["simulate", "--config", "unused.json", "--publication"]);
    assert!(!out.status.success());
}

#[test]
fn bad_input_exits_with_two() {
    let out = glbrown(&["limit", "--word", "1 x", "--t", "1", "--r", "1", "--s", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn moments_csv_has_header() {
    let out = glbrown(&["moments", "--r", "1", "--s", "0.5", "--t", "0.5,1", "--n-max", "3", "--word", "1*1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "r,s,t,name,n,value");
    assert_eq!(text.lines().count(), 1 + 2 * (2 * 3 + 3 + 1));
}
