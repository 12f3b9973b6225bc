//! End-to-end tests of the command-line interface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sketchim")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn write_star(dir: &Path) -> std::path::PathBuf {
    // center 100 with 20 leaves, non-contiguous IDs on purpose
    let mut text = String::from("# star fixture\n");
    for leaf in 0..20 {
        text.push_str(&format!("100 {}\n", 200 + leaf));
    }
    let path = dir.join("star.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn select_star_picks_center() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let out = run(&[
        "select", "--graph", star.to_str().unwrap(), "--weights", "const:1.0", "-k", "1", "-j",
        "32",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["seeds"], serde_json::json!([100]));
    assert_eq!(json["format_version"], 1);
    assert_eq!(json["config"]["n"], 21);
}

#[test]
fn select_k_zero_is_empty_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let out = run(&["select", "--graph", star.to_str().unwrap(), "-k", "0"]);
    let json = stdout_json(&out);
    assert_eq!(json["seeds"].as_array().unwrap().len(), 0);
    assert_eq!(json["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn select_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let args = [
        "select", "--graph", star.to_str().unwrap(), "-k", "3", "-j", "64", "--seed", "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn select_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let out_path = dir.path().join("result.json");
    let out = run(&[
        "select", "--graph", star.to_str().unwrap(), "-k", "2", "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_graph_file_exits_3() {
    let out = run(&["select", "--graph", "/nonexistent/graph.txt", "-k", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_graph_line_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "0 1\n2 x\n").unwrap();
    let out = run(&["select", "--graph", path.to_str().unwrap(), "-k", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn bad_weight_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let out = run(&[
        "select", "--graph", star.to_str().unwrap(), "-k", "1", "--weights", "const:7",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_star_with_certain_edges() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "100\n").unwrap();
    let out = run(&[
        "evaluate", "--graph", star.to_str().unwrap(), "--weights", "const:1.0", "--seeds",
        seeds.to_str().unwrap(), "-r", "50",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed_set_size,mean,stderr,R"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[1].parse::<f64>().unwrap(), 21.0);
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[3], "50");
}

#[test]
fn evaluate_accepts_select_json() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let result = dir.path().join("result.json");
    let out = run(&[
        "select", "--graph", star.to_str().unwrap(), "--weights", "const:1.0", "-k", "1", "-o",
        result.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "evaluate", "--graph", star.to_str().unwrap(), "--weights", "const:1.0", "--seeds",
        result.to_str().unwrap(), "-r", "20",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\n1,21,"));
}

#[test]
fn evaluate_unknown_vertex_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "9999\n").unwrap();
    let out = run(&[
        "evaluate", "--graph", star.to_str().unwrap(), "--seeds", seeds.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9999"));
}

#[test]
fn bias_stats_emits_fixed_header_and_bins() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let out = run(&[
        "bias-stats", "--graph", star.to_str().unwrap(), "-j", "64", "--samples", "1000",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin_lo,bin_hi,count,expected,bias");
    assert_eq!(lines.len(), 101);
}

#[test]
fn bench_sweep_of_two_configs() {
    let dir = tempfile::tempdir().unwrap();
    let star = write_star(dir.path());
    let sweep = dir.path().join("sweep.json");
    let runs = serde_json::json!([
        {"graph": star, "weights": "const:1.0", "k": 1, "j": 32, "seed": 1, "oracle_rounds": 20},
        {"graph": star, "weights": "const:0.5", "k": 2, "j": 32, "seed": 1, "oracle_rounds": 20},
    ]);
    fs::write(&sweep, serde_json::to_string(&runs).unwrap()).unwrap();
    let args = ["bench", "--sweep", sweep.to_str().unwrap()];
    let out = run(&args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("format_version,graph,weights,k,j,"));
    assert!(lines[0].contains("wall_time_s"));
    // score columns reproduce across reruns
    let again = String::from_utf8(run(&args).stdout).unwrap();
    let score_cols = |line: &str| {
        line.split(',').enumerate()
            .filter(|(i, _)| [10, 11, 12, 13].contains(i))
            .map(|(_, f)| f.to_string())
            .collect::<Vec<_>>()
    };
    for (a, b) in text.lines().skip(1).zip(again.lines().skip(1)) {
        assert_eq!(score_cols(a), score_cols(b));
    }
}
