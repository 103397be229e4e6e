use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dsqn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsqn"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = dsqn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every file under `dir` except the wall-clock manifest, keyed by relative path.
fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, acc);
            } else if path.file_name().unwrap() != "manifest.json" {
                acc.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(dir, dir, &mut acc);
    acc
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_TRAIN: [&str; 12] = [
    "--set",
    "total_steps=1500",
    "--set",
    "trainer.warmup_steps=200",
    "--set",
    "network.window=8",
    "--set",
    "network.hidden=[16]",
    "--set",
    "trainer.checkpoint_interval=500",
    "--set",
    "final_eval.rounds=3",
];

fn train_args<'a>(out: &'a str, seed: &'a str) -> Vec<&'a str> {
    let mut v = vec!["train", "--seed", seed, "--out", out];
    v.extend_from_slice(&SMALL_TRAIN);
    v
}

#[test]
fn train_is_byte_identical_for_the_same_seed() {
    let tmp = TempDir::new().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&train_args(s(&a), "3"));
    ok(&train_args(s(&b), "3"));
    ok(&train_args(s(&c), "4"));
    let (fa, fb, fc) = (artifacts(&a), artifacts(&b), artifacts(&c));
    for name in ["config.json", "train_log.csv", "network.json", "eval.json", "periodic_eval.csv"] {
        assert!(fa.contains_key(Path::new(name)), "missing {name}");
    }
    assert_eq!(fa.keys().filter(|k| k.starts_with("checkpoints")).count(), 3);
    assert_eq!(fa, fb);
    assert_ne!(fa[Path::new("train_log.csv")], fc[Path::new("train_log.csv")]);

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["total_steps"], 1500);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&train_args(s(&a), "8"));
    let config = a.join("config.json");
    ok(&["train", "--config", s(&config), "--out", s(&b)]);
    assert_eq!(artifacts(&a), artifacts(&b));
}

#[test]
fn checkpoint_round_trips_through_eval() {
    let tmp = TempDir::new().unwrap();
    let train_dir = tmp.path().join("train");
    ok(&train_args(s(&train_dir), "1"));
    let ckpt = train_dir.join("network.json");
    let doc: Value = serde_json::from_slice(&fs::read(&ckpt).unwrap()).unwrap();
    for field in ["format", "version", "kind", "layers", "weights", "neuron", "surrogate", "window", "seed"] {
        assert!(doc.get(field).is_some(), "checkpoint lacks {field}");
    }
    let eval_dir = tmp.path().join("eval");
    let set_ckpt = format!("checkpoint={}", s(&ckpt));
    ok(&[
        "eval", "--out", s(&eval_dir), "--set", &set_ckpt, "--set", "eval.rounds=4", "--set", "eval.epsilon=0", "--set",
        "trajectory=true",
    ]);
    let scores = fs::read_to_string(eval_dir.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().next(), Some("round,score"));
    assert_eq!(scores.lines().count(), 5);
    let trajectory = fs::read_to_string(eval_dir.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().next(), Some("step,action,reward,done"));
}

#[test]
fn ratecurve_tracks_inputs_within_one_over_window() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("rc");
    ok(&["ratecurve", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("rate_curve.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("input,rate"), "{header}");
    let mut n = 0;
    for line in lines {
        let mut cols = line.split(',');
        let x: f64 = cols.next().unwrap().parse().unwrap();
        let r: f64 = cols.next().unwrap().parse().unwrap();
        assert!((r - x).abs() <= 1.0 / 400.0 + 1e-12, "{x} -> {r}");
        n += 1;
    }
    assert_eq!(n, 21);
}

#[test]
fn gradcheck_default_net_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gc");
    ok(&["gradcheck", "--out", s(&out)]);
    let report: Value = serde_json::from_slice(&fs::read(out.join("gradcheck.json")).unwrap()).unwrap();
    assert_eq!(report["differentiable"], true);
    assert!(report["max_rel_error"].as_f64().unwrap() <= 1e-4, "{report}");
    let csv = fs::read_to_string(out.join("gradcheck.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("layer,weight_index,analytic,numeric,rel_error"));
}

#[test]
fn convert_audit_energy_pipeline() {
    let tmp = TempDir::new().unwrap();
    let ann_dir = tmp.path().join("ann");
    let mut args = train_args(s(&ann_dir), "2");
    args.extend_from_slice(&["--set", "network.spiking=false", "--set", "env.kind=cartpole"]);
    ok(&args);
    let ann = ann_dir.join("network.json");
    let doc: Value = serde_json::from_slice(&fs::read(&ann).unwrap()).unwrap();
    assert_eq!(doc["kind"], "relu");
    assert!(doc.get("biases").is_some());

    let conv_dir = tmp.path().join("conv");
    let set_ann = format!("checkpoint={}", s(&ann));
    let env = ["--set", "env.kind=cartpole", "--set", "conversion.calibration_states=200"];
    let mut conv_args = vec!["convert", "--out", s(&conv_dir), "--set", &set_ann];
    conv_args.extend_from_slice(&env);
    ok(&conv_args);
    let snn = conv_dir.join("snn.json");
    let scales: Value = serde_json::from_slice(&fs::read(conv_dir.join("scales.json")).unwrap()).unwrap();
    assert!(scales["scales"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() > 0.0));

    let audit_dir = tmp.path().join("audit");
    let (set_a, set_s) = (format!("ann={}", s(&ann)), format!("snn={}", s(&snn)));
    ok(&[
        "audit", "--out", s(&audit_dir), "--set", &set_a, "--set", &set_s, "--set", "env.kind=cartpole", "--set",
        "states=100", "--set", "windows=[10,100]",
    ]);
    let audit = fs::read_to_string(audit_dir.join("audit.csv")).unwrap();
    assert_eq!(audit.lines().next(), Some("window,argmax_agreement,mean_abs_dq"));
    assert_eq!(audit.lines().count(), 3);

    let energy_dir = tmp.path().join("energy");
    ok(&["energy", "--out", s(&energy_dir), "--set", "neurons_direct=100", "--set", "neurons_converted=100"]);
    let report: Value = serde_json::from_slice(&fs::read(energy_dir.join("energy.json")).unwrap()).unwrap();
    assert_eq!(report["cost_direct"], 25_600);
    assert_eq!(report["cost_converted"], 50_000);
}

fn error_line(out: &Output) -> String {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    lines[0].to_owned()
}

#[test]
fn unknown_field_is_a_config_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let out = dsqn(&["train", "--out", s(tmp.path()), "--set", "trainer.learning_rate=0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let line = error_line(&out);
    assert!(line.starts_with("error: kind=config path=\"trainer.learning_rate\" msg=\""), "{line}");
}

#[test]
fn bad_config_file_and_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\"trainer\": {\"gamma\": \"high\"}}").unwrap();
    let out = dsqn(&["train", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error: kind=config path=\"trainer.gamma\""));

    let out = dsqn(&["fly"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error: kind=usage msg="));
}

#[test]
fn runtime_failures_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = dsqn(&["eval", "--out", s(tmp.path()), "--set", "checkpoint=/nonexistent/net.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).starts_with("error: kind=io msg="));

    // a spiking checkpoint is not a conversion source
    let train_dir = tmp.path().join("t");
    ok(&train_args(s(&train_dir), "0"));
    let set = format!("checkpoint={}", s(&train_dir.join("network.json")));
    let out = dsqn(&["convert", "--out", s(&tmp.path().join("c")), "--set", &set]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).starts_with("error: kind=contract msg="));
}
