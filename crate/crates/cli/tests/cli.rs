use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: TempDir::new().unwrap() }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, body).unwrap();
        path
    }

    fn cache(&self) -> PathBuf {
        self.dir.path().join("cache")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_mdp")).args(args).env("MDP_CACHE_DIR", self.cache()).output().unwrap()
    }
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const LINE2: &str = r#"{"kind": "line", "n": 2, "base": 2}"#;
const DISCRETE5: &str = r#"{"kind": "discrete", "n": 5, "base": "2"}"#;

#[test]
fn check_dp_accepts_and_rejects() {
    let w = Workspace::new();
    let metric = w.file("m.json", LINE2);
    let good = w.file("good.json", r#"{"rows": [["2/3", "1/3"], ["1/3", "2/3"]]}"#);
    let bad = w.file("bad.json", r#"{"rows": [["9/10", "1/10"], ["1/10", "9/10"]]}"#);
    let ok = w.run(&["check-dp", "--channel", arg(&good), "--metric", arg(&metric)]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "ok");
    let fail = w.run(&["--format", "json", "check-dp", "--channel", arg(&bad), "--metric", arg(&metric)]);
    assert_eq!(fail.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&fail)).unwrap();
    assert_eq!(report["private"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn capacity_is_exact() {
    let w = Workspace::new();
    let metric = w.file("m.json", DISCRETE5);
    let lp = w.run(&["--format", "csv", "capacity", "--metric", arg(&metric), "--mode", "mult"]);
    assert_eq!(lp.status.code(), Some(0));
    assert!(stdout(&lp).lines().nth(1).unwrap().ends_with(",5/3"));
    let closed = w.run(&["--format", "csv", "capacity", "--metric", arg(&metric), "--mode", "add", "--closed-form"]);
    assert!(stdout(&closed).lines().nth(1).unwrap().ends_with(",4/9"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let w = Workspace::new();
    let metric = w.file("m.json", "{\"kind\": \"line\",\n \"n\": }");
    let out = w.run(&["vertices", "--metric", arg(&metric)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
    assert_eq!(w.run(&["vertices"]).status.code(), Some(2));
}

#[test]
fn search_limit_exits_three() {
    let w = Workspace::new();
    let metric = w.file("m.json", r#"{"kind": "line", "n": 4, "base": 2}"#);
    let out = w.run(&["--no-cache", "vertices", "--metric", arg(&metric), "--limit", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn refinement_assertion() {
    let w = Workspace::new();
    let b = w.file("b.json", r#"{"rows": [["2/3", "1/3"], ["1/3", "2/3"]]}"#);
    let a = w.file("a.json", r#"{"rows": [["1"], ["1"]]}"#);
    assert_eq!(w.run(&["refines", "--b", arg(&b), "--a", arg(&a), "--assert"]).status.code(), Some(0));
    let no = w.run(&["refines", "--b", arg(&a), "--a", arg(&b), "--assert"]);
    assert_eq!(no.status.code(), Some(1));
    assert_eq!(stdout(&no).trim(), "no");
}

#[test]
fn optimality_verdicts() {
    let w = Workspace::new();
    let metric = w.file("m.json", r#"{"kind": "discrete", "n": 3, "base": 2}"#);
    let trivial = w.file("t.json", r#"{"rows": [["1"], ["1"], ["1"]]}"#);
    let bin = w.file("l.json", r#"{"table": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}"#);
    let out = w.run(&[
        "--format",
        "json",
        "optimal",
        "--channel",
        arg(&trivial),
        "--loss",
        arg(&bin),
        "--metric",
        arg(&metric),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "counterexample");
    let flat = w.file("f.json", r#"{"table": [[1, 2, 3]]}"#);
    let ok = w.run(&["optimal", "--channel", arg(&trivial), "--loss", arg(&flat), "--metric", arg(&metric)]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "optimal");
}

#[test]
fn reproduce_csv_matches() {
    let w = Workspace::new();
    let out = w.run(&["reproduce", "--table", "discrete", "--max-n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "Dims,Vertices,Kernels,MultCapacity,AddCapacity,VerticesMatch,KernelsMatch,MultMatch,AddMatch\n\
         2,2,1,4/3,1/3,match,match,match,match\n\
         3,6,5,3/2,2/5,match,match,match,match\n"
    );
    assert_eq!(w.run(&["reproduce", "--table", "grid", "--max-n", "9"]).status.code(), Some(2));
}

#[test]
fn cached_kernels_are_byte_identical() {
    let w = Workspace::new();
    let metric = w.file("m.json", r#"{"kind": "line", "n": 4, "base": 2}"#);
    let first = w.run(&["--format", "json", "kernels", "--metric", arg(&metric)]);
    assert_eq!(first.status.code(), Some(0));
    assert!(fs::read_dir(w.cache()).unwrap().count() > 0);
    let second = w.run(&["--format", "json", "kernels", "--metric", arg(&metric)]);
    let verified = w.run(&["--format", "json", "--verify-cache", "kernels", "--metric", arg(&metric)]);
    let uncached = w.run(&["--format", "json", "--no-cache", "kernels", "--metric", arg(&metric)]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, verified.stdout);
    assert_eq!(first.stdout, uncached.stdout);
    let kernels: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(kernels.as_array().unwrap().len(), 11);
}

#[test]
fn hyper_of_channel() {
    let w = Workspace::new();
    let c = w.file("c.json", r#"{"rows": [["1/2", "1/2"], ["0", "1"]]}"#);
    let prior = w.file("p.json", r#"["1/2", "1/2"]"#);
    let out = w.run(&["--format", "json", "to-hyper", "--channel", arg(&c), "--prior", arg(&prior)]);
    assert_eq!(out.status.code(), Some(0));
    let h: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(h["outers"], serde_json::json!(["3/4", "1/4"]));
    assert_eq!(h["inners"], serde_json::json!([["1/3", "2/3"], ["1", "0"]]));
}
