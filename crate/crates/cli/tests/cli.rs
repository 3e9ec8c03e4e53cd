use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn actilabel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actilabel"))
        .args(args)
        .current_dir(dir)
        .env_remove("ACTILABEL_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn spec(seed: u64) -> Value {
    json!({"classes": 4, "per_class": 60, "dim": 6, "separation": 6.0, "noise": 0.0, "seed": seed})
}

fn synth_source(seed: u64, side: &str) -> Value {
    json!({"kind": "synth", "side": side, "spec": spec(seed)})
}

fn write(dir: &Path, name: &str, v: &Value) {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn run_config() -> Value {
    json!({
        "source": synth_source(2, "source"),
        "target": synth_source(2, "target"),
        "source_clustering": "cci"
    })
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", &run_config());
    let o = actilabel(&["run", "--config", "cfg.json", "--k", "8", "--seed", "42", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["k_target"], 8);
    assert_eq!(report["metadata"]["seed"], 42);
    for f in ["label_map.json", "target_partition.csv", "source_depgraph.json", "assigned_labels.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", &run_config());
    for out in ["a", "b"] {
        assert_eq!(code(&actilabel(&["run", "--config", "cfg.json", "--out", out], dir.path())), 0);
    }
    let read = |d: &str| std::fs::read(dir.path().join(d).join("report.json")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", &run_config());
    let missing = actilabel(&["run", "--config", "missing.json", "--out", "o"], dir.path());
    assert_eq!(code(&missing), 1);
    assert_eq!(code(&actilabel(&["run", "--config", "cfg.json"], dir.path())), 1);
    assert_eq!(code(&actilabel(&["run", "--config", "cfg.json", "--k", "0", "--out", "o"], dir.path())), 1);
    assert_eq!(code(&actilabel(&["frobnicate"], dir.path())), 1);
    let mut unlabeled = run_config();
    unlabeled["source"] = json!({"kind": "csv", "path": "raw.csv", "schema": {"channels": ["x"], "sample_rate_hz": 50.0}});
    write(dir.path(), "bad.json", &unlabeled);
    let o = actilabel(&["run", "--config", "bad.json", "--out", "o"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("label"));
    assert_eq!(code(&actilabel(&["--help"], dir.path())), 0);
}

#[test]
fn stage_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", &run_config());
    let o = actilabel(&["run", "--config", "cfg.json", "--k", "1000", "--out", "o"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("graph stage"));
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "spec.json", &spec(5));
    let ok = |args: &[&str]| {
        let o = actilabel(args, d);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    ok(&["synth", "--spec", "spec.json", "--out", "data"]);
    ok(&["graph", "--features", "data/target.csv", "--out", "edges.csv"]);
    assert!(std::fs::read_to_string(d.join("edges.csv")).unwrap().lines().count() > 1);
    ok(&["cluster", "--features", "data/target.csv", "--m", "4", "--out", "part.csv"]);
    ok(&["depgraph", "--features", "data/target.csv", "--partition", "part.csv", "--out", "t.json"]);
    ok(&["depgraph", "--features", "data/source.csv", "--from-labels", "--out", "s.json"]);
    ok(&["transfer", "--target", "t.json", "--source", "s.json", "--partition", "part.csv", "--out", "map"]);
    ok(&[
        "evaluate",
        "--pred",
        "map/assigned_labels.csv",
        "--truth",
        "data/target.csv",
        "--partition",
        "part.csv",
        "--out",
        "scores.json",
    ]);
    let scores: Value = serde_json::from_str(&std::fs::read_to_string(d.join("scores.json")).unwrap()).unwrap();
    for key in ["labeling_accuracy", "macro_f1", "nmi", "purity"] {
        let v = scores[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert!(scores["nmi"].as_f64().unwrap() > 0.9);
}

#[test]
fn features_from_raw_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut raw = String::from("t,x,y,activity\n");
    for i in 0..400 {
        let label = usize::from(i >= 200);
        raw.push_str(&format!("{},{},{},{label}\n", i as f64 / 50.0, (i as f64 * 0.3).sin(), (i % 7) as f64));
    }
    std::fs::write(d.join("raw.csv"), raw).unwrap();
    write(d, "schema.json", &json!({"time_column": "t", "channels": ["x", "y"], "label_column": "activity"}));
    let o = actilabel(&["features", "--input", "raw.csv", "--schema", "schema.json", "--out", "f.csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("f.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",label"));
    assert!(text.lines().count() > 5);
}

fn grid_json(extra_domain: Option<Value>) -> Value {
    let mut domains = vec![
        json!({"name": "a", "dataset": "synth", "data": synth_source(1, "source")}),
        json!({"name": "b", "dataset": "synth", "data": synth_source(1, "target")}),
    ];
    let mut members = vec!["a", "b"];
    if let Some(d) = extra_domain {
        domains.push(d);
        members.push("broken");
    }
    json!({
        "domains": domains,
        "groups": [{"scenario": "cross-subject", "members": members}],
        "base": run_config(),
    })
}

#[test]
fn grid_runs_pairs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "grid.json", &grid_json(None));
    let o = actilabel(&["grid", "--grid", "grid.json", "--out", "g"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("g/summary.csv")).unwrap();
    // Two ordered pairs plus one average row.
    assert_eq!(summary.lines().count(), 1 + 3);
    assert!(dir.path().join("g/cross-subject/a__b/report.json").exists());
}

#[test]
fn grid_partial_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let broken = json!({"name": "broken", "dataset": "synth", "data": {"kind": "features", "path": "nope.csv"}});
    write(dir.path(), "grid.json", &grid_json(Some(broken)));
    let o = Command::new(env!("CARGO_BIN_EXE_actilabel"))
        .args(["grid", "--grid", "grid.json", "--out", "g"])
        .current_dir(dir.path())
        .env("ACTILABEL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("g/summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.contains("failed")).count(), 4);
}

#[test]
fn bad_thread_count_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "grid.json", &grid_json(None));
    let o = Command::new(env!("CARGO_BIN_EXE_actilabel"))
        .args(["grid", "--grid", "grid.json", "--out", "g"])
        .current_dir(dir.path())
        .env("ACTILABEL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_k_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", &run_config());
    let o = actilabel(
        &["sweep-k", "--config", "cfg.json", "--ks", "2,4,8,16", "--dataset", "synth", "--out", "s"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s/plot_data.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "metric,param,value,dataset,scenario");
    assert_eq!(lines.filter(|l| l.starts_with("nmi,")).count(), 4);
    let partial = actilabel(&["sweep-k", "--config", "cfg.json", "--ks", "4,1000", "--out", "p"], dir.path());
    assert_eq!(code(&partial), 3);
}
