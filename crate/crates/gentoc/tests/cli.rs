//! End-to-end smoke tests of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn gentoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gentoc"))
        .args(args)
        .output()
        .expect("failed to spawn gentoc binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_plan(path: &Path, kind: &str) {
    let plan = serde_json::json!({
        "kind": kind,
        "model": {
            "d_model": 16,
            "n_heads": 2,
            "n_encoder_layers": 1,
            "n_decoder_layers": 1,
            "ffn_dim": 32,
            "max_len": 48,
            "dropout": 0.0
        },
        "epochs": 2,
        "batch_size": 16,
        "seed": 1,
        "lr": 1e-3
    });
    std::fs::write(path, serde_json::to_string(&plan).unwrap()).unwrap();
}

#[test]
fn help_lists_subcommands() {
    let out = gentoc(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in ["synth", "train", "infer", "eval", "bootstrap", "prcurve", "bench"] {
        assert!(text.contains(sub), "--help missing {sub}:\n{text}");
    }
}

#[test]
fn unknown_subcommand_fails() {
    let out = gentoc(&["frobnicate"]);
    assert!(!out.status.success());
}

#[test]
fn full_workflow_synth_train_infer_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.jsonl");
    let syn = dir.path().join("synonyms.json");

    let out = gentoc(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--n",
        "80",
        "--seed",
        "7",
        "--coverage",
        "0.5",
        "--synonyms-out",
        syn.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let coverage = report["mean_token_coverage"].as_f64().unwrap();
    assert!((0.3..=0.7).contains(&coverage), "coverage {coverage}");
    assert!(syn.exists());

    let genae_plan = dir.path().join("genae.json");
    let tocve_plan = dir.path().join("tocve.json");
    write_plan(&genae_plan, "genae");
    write_plan(&tocve_plan, "tocve");
    let genae_ckpt = dir.path().join("genae.ckpt");
    let tocve_ckpt = dir.path().join("tocve.ckpt");
    for (plan, ckpt) in [(&genae_plan, &genae_ckpt), (&tocve_plan, &tocve_ckpt)] {
        let out = gentoc(&[
            "train",
            "--config",
            plan.to_str().unwrap(),
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            ckpt.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "train failed: {}", stderr(&out));
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(report["loss_history"].as_array().unwrap().len(), 2);
        assert!(ckpt.exists());
    }

    let out = gentoc(&[
        "infer",
        "--checkpoint",
        genae_ckpt.to_str().unwrap(),
        "--checkpoint",
        tocve_ckpt.to_str().unwrap(),
        "--name",
        "boat raging red",
    ]);
    assert!(out.status.success(), "infer failed: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["pairs"].is_array());

    let out = gentoc(&[
        "eval",
        "--checkpoint",
        genae_ckpt.to_str().unwrap(),
        "--checkpoint",
        tocve_ckpt.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--synonyms",
        syn.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "eval failed: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let slices = report["slices"].as_array().unwrap();
    assert!(slices.iter().any(|s| s["name"] == "all"));
    assert!(slices.iter().any(|s| s["name"] == "long_names"));

    // A lone stage-1 checkpoint cannot form an extractor.
    let out = gentoc(&[
        "infer",
        "--checkpoint",
        genae_ckpt.to_str().unwrap(),
        "--name",
        "boat raging red",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("error:"), "{}", stderr(&out));
}

#[test]
fn eval_on_missing_dataset_prints_one_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = gentoc(&[
        "eval",
        "--checkpoint",
        dir.path().join("nope.ckpt").to_str().unwrap(),
        "--dataset",
        dir.path().join("nope.jsonl").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "expected a single error line, got:\n{err}");
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn synth_rejects_bad_coverage_and_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.jsonl");
    let out = gentoc(&["synth", "--out", data.to_str().unwrap(), "--coverage", "1.5"]);
    assert!(!out.status.success());
    let out = gentoc(&["synth", "--out", data.to_str().unwrap(), "--scheme", "nope"]);
    assert!(!out.status.success());
}
