use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scorecard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scorecard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let o = scorecard(args);
    assert!(o.status.success(), "scorecard {args:?} failed: {}", stderr(&o));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset plus a fast configuration.
fn fixture(rows: usize) -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, "seed = 5\n[models]\nbudget = 2\n[explain]\nbackground_rows = 100\n").unwrap();
    let data = dir.path().join("data.csv");
    let rows = rows.to_string();
    ok(&["synth", "--config", s(&config), "--rows", &rows, "--output", s(&data)]);
    (dir, config, data)
}

#[test]
fn missing_target_column_is_a_contract_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "obs_date,x\n2018-01-01,1\n2018-02-01,2\n").unwrap();
    let out = dir.path().join("run");
    let o = scorecard(&["split", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("default_flag"), "{}", stderr(&o));
}

#[test]
fn unknown_family_and_missing_stage_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(scorecard(&["select", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(scorecard(&["train", "--family", "bogus", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(scorecard(&["report", "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn config_prints_parseable_defaults() {
    let o = ok(&["config"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let cfg = scorecard_core::config::RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg, scorecard_core::config::RunConfig::default());
}

#[test]
fn stages_end_to_end() {
    let (dir, config, data) = fixture(4000);
    let out = dir.path().join("run");
    let (cfg, out_s) = (s(&config), s(&out));
    ok(&["split", "--config", cfg, "--data", s(&data), "--out", out_s]);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("splits/split.json")).unwrap()).unwrap();
    let counts = summary["counts"].as_object().unwrap();
    let total: u64 = counts.values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 4000);

    // training before selection needs an explicit list
    let o = scorecard(&["train", "--family", "logistic", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    ok(&["train", "--family", "logistic", "--features", "inf_01,inf_02", "--out", out_s]);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports/logistic.metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["model_name"], "logistic_2");

    ok(&["select", "--out", out_s]);
    ok(&["train", "--family", "gbm", "--out", out_s]);
    ok(&["report", "--out", out_s]);
    let table = std::fs::read_to_string(out.join("report/table.csv")).unwrap();
    // re-running selection made the earlier logistic fit stale
    assert_eq!(table.lines().count(), 2, "{table}");
    assert!(table.starts_with("model,gini_train,"));
    assert!(table.lines().nth(1).unwrap().starts_with("gbm_"), "{table}");

    ok(&["explain", "--family", "gbm", "--what", "pfi,bd", "--instance", "0,3", "--out", out_s]);
    assert!(out.join("explain/gbm/pfi.json").exists());
    let o = scorecard(&["explain", "--family", "gbm", "--what", "cp", "--instance", "99999", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("OutOfRange"), "{}", stderr(&o));

    let scores = dir.path().join("scores.csv");
    ok(&[
        "predict",
        "--model",
        s(&out.join("models/gbm.json")),
        "--data",
        s(&out.join("splits/test.csv")),
        "--output",
        s(&scores),
        "--out",
        out_s,
    ]);
    let text = std::fs::read_to_string(&scores).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "row,score");
    assert_eq!(rows.len() - 1, counts["test"].as_u64().unwrap() as usize);
    for r in &rows[1..] {
        let p: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn tampered_preprocessing_is_refused() {
    let (dir, config, data) = fixture(3000);
    let out = dir.path().join("run");
    ok(&["split", "--config", s(&config), "--data", s(&data), "--out", s(&out)]);
    let pre = out.join("splits/preprocess.json");
    let text = std::fs::read_to_string(&pre).unwrap();
    std::fs::write(&pre, text.replacen('1', "2", 1)).unwrap();
    let o = scorecard(&["train", "--family", "logistic", "--features", "inf_01", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MissingArtifact"), "{}", stderr(&o));
}

#[test]
fn empty_selection_warns_but_succeeds() {
    let (dir, config, data) = fixture(3000);
    let strict = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(&config).unwrap() + "[selection]\nmin_ks = 1.0\n";
    std::fs::write(&strict, text).unwrap();
    let out = dir.path().join("run");
    ok(&["split", "--config", s(&strict), "--data", s(&data), "--out", s(&out)]);
    let o = ok(&["select", "--out", s(&out)]);
    assert!(stderr(&o).contains("no feature survived"), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("selection/features.txt")).unwrap(), "");
    let o = scorecard(&["train", "--family", "logistic", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
