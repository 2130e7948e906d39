use beliefreach::error::Error;
use beliefreach::scenario::{parse_scenario, Scenario};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn fixture_value(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn scenario_path(e: Error) -> String {
    match e {
        Error::Scenario { path, .. } => path,
        other => panic!("expected a scenario error, got {other}"),
    }
}

#[test]
fn fixtures_round_trip() {
    for name in ["running_example.json", "naive_disc.json", "irrational_human.json", "misspecified_goal.json"] {
        let a = Scenario::load(&fixture(name)).unwrap();
        let text = a.to_json().unwrap();
        let b = parse_scenario(&text).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(text, b.to_json().unwrap(), "{name}");
        assert_eq!(a.hash(), b.hash());
    }
}

#[test]
fn rejections_name_the_offending_field() {
    let mut v = fixture_value("running_example.json");
    v["human"]["sigmas"][1] = Value::from(-0.5);
    assert_eq!(scenario_path(parse_scenario(&v.to_string()).unwrap_err()), "human.sigmas[1]");

    let mut v = fixture_value("running_example.json");
    v["predict"]["deltas"][2] = Value::from(-0.1);
    assert_eq!(scenario_path(parse_scenario(&v.to_string()).unwrap_err()), "predict.deltas[2]");

    let mut v = fixture_value("running_example.json");
    v["solver"]["horizon"] = Value::from("two");
    assert_eq!(scenario_path(parse_scenario(&v.to_string()).unwrap_err()), "solver.horizon");

    let mut v = fixture_value("running_example.json");
    v.as_object_mut().unwrap().remove("seed");
    assert!(matches!(parse_scenario(&v.to_string()), Err(Error::Scenario { .. })));
}

#[test]
fn hash_tracks_content() {
    let a = Scenario::load(&fixture("running_example.json")).unwrap();
    let mut v = fixture_value("running_example.json");
    v["seed"] = Value::from(2);
    let b = parse_scenario(&v.to_string()).unwrap();
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beliefreach"))
}

/// A coarse copy of the running example that predicts in well under a second.
fn small_scenario(dir: &Path) -> PathBuf {
    let mut v = fixture_value("running_example.json");
    v["grid"]["human"]["counts"] = serde_json::json!([17, 17]);
    v["grid"]["belief"]["count"] = Value::from(5);
    v["solver"]["horizon"] = Value::from(0.4);
    v["predict"]["particles"]["count"] = Value::from(2000);
    let p = dir.join("small.json");
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn cli_reports_errors_as_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_value("running_example.json");
    v["human"]["sped"] = Value::from(1.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = bin()
        .args(["predict", "--scenario"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "scenario");
    assert_eq!(err["error"]["path"], "human.sped");

    let out = bin().args(["predict", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["analyze", "--scenario"])
        .arg(small_scenario(dir.path()))
        .arg("--out")
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "running example has no analysis section");
}

#[test]
fn cli_predict_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let sc = small_scenario(dir.path());
    let out = dir.path().join("pred");
    let run = bin()
        .args(["predict", "--scenario"])
        .arg(&sc)
        .arg("--out")
        .arg(&out)
        .args(["--delta", "0.05,0.1", "--seed", "3", "--epsilon-mass", "0.9"])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    let labels: Vec<&str> = manifest["tubes"].as_array().unwrap().iter().map(|t| t["label"].as_str().unwrap()).collect();
    assert_eq!(labels.len(), 4, "{labels:?}");
    let echoed = Scenario::load(&out.join("scenario.json")).unwrap();
    assert_eq!(echoed.seed, 3);
    assert_eq!(echoed.hash(), manifest["scenario_hash"]);

    let svg = dir.path().join("svg");
    let render = bin().arg("render").arg("--input").arg(&out).arg("--out").arg(&svg).output().unwrap();
    assert!(render.status.success(), "{}", String::from_utf8_lossy(&render.stderr));
    let first = std::fs::read_to_string(svg.join("snapshot_000.svg")).unwrap();
    assert!(first.starts_with("<svg") || first.starts_with("<?xml"));
    assert_eq!(std::fs::read_dir(&svg).unwrap().count(), manifest["snapshots"].as_u64().unwrap() as usize);
}

#[test]
fn cli_naive_only_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let run = bin()
        .args(["predict", "--predictor", "naive", "--scenario"])
        .arg(small_scenario(dir.path()))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tubes"].as_array().unwrap().len(), 1);
}
