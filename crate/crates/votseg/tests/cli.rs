use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn votseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_votseg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TINY: &str = "hidden = 4\nbranch_width = 4\nmax_epochs = 1\nepoch_size = 8\n";

/// synth, train, predict and eval on a tiny model.
fn pipeline(root: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = root.join("data");
    ok(&votseg(&["synth", "--out", &s(&data), "--seed", "3", "--n", "30", "--corpora", "2"]));
    let cfg = root.join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let model = root.join("model");
    let manifest = data.join("manifest.jsonl");
    let out = votseg(&[
        "train",
        "--manifest",
        &s(&manifest),
        "--config",
        &s(&cfg),
        "--out",
        &s(&model),
    ]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("learning_rate = 0.01"), "resolved config not printed: {stdout}");
    assert!(stdout.contains("hidden = 4"));
    (manifest, model)
}

#[test]
fn full_pipeline_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, model) = pipeline(tmp.path());
    for f in ["model.json", "train_log.jsonl", "config.toml", "splits/test.jsonl"] {
        assert!(model.join(f).exists(), "{f} missing");
    }
    let preds = tmp.path().join("pred.jsonl");
    ok(&votseg(&[
        "predict",
        "--model",
        &s(&model.join("model.json")),
        "--manifest",
        &s(&manifest),
        "--out",
        &s(&preds),
    ]));
    let lines = fs::read_to_string(&preds).unwrap().lines().count();
    assert_eq!(lines, 31, "header plus one record per utterance");
    // split manifests point back into the data directory
    ok(&votseg(&[
        "predict",
        "--model",
        &s(&model.join("model.json")),
        "--manifest",
        &s(&model.join("splits/test.jsonl")),
        "--out",
        &s(&tmp.path().join("test_pred.jsonl")),
    ]));

    let report = tmp.path().join("eval");
    ok(&votseg(&[
        "eval",
        "--predictions",
        &s(&preds),
        "--manifest",
        &s(&manifest),
        "--taus",
        "2,5",
        "--seen-corpora",
        "corpus0",
        "--out",
        &s(&report),
    ]));
    let text = fs::read_to_string(report.join("report.txt")).unwrap();
    for row in ["all", "within-corpus", "unseen-corpus", "boundary-offset"] {
        assert!(text.contains(row), "{row} missing from\n{text}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn ordering_violation_is_a_data_error_naming_the_utterance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut feat = String::from("100 2\n");
    for i in 0..100 {
        feat.push_str(&format!("{i} {}\n", i % 7));
    }
    fs::write(tmp.path().join("f.txt"), feat).unwrap();
    let mut manifest = String::new();
    for (i, spk) in ["a", "b", "c", "d"].iter().enumerate() {
        manifest.push_str(&format!(
            "{{\"utterance_id\":\"ok{i}\",\"corpus_id\":\"c\",\"speaker_id\":\"{spk}\",\"features\":\"f.txt\",\"annotation\":{{\"t_b\":20,\"t_v\":50}}}}\n"
        ));
    }
    manifest.push_str(
        "{\"utterance_id\":\"broken7\",\"corpus_id\":\"c\",\"speaker_id\":\"e\",\"features\":\"f.txt\",\"annotation\":{\"t_pv\":30,\"t_b\":20,\"t_v\":50}}\n",
    );
    let path = tmp.path().join("m.jsonl");
    fs::write(&path, manifest).unwrap();
    let out = votseg(&["train", "--manifest", &s(&path), "--out", &s(&tmp.path().join("run"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("broken7"), "{}", stderr(&out));
}

#[test]
fn eval_with_missing_prediction_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, model) = pipeline(tmp.path());
    let preds = tmp.path().join("pred.jsonl");
    ok(&votseg(&[
        "predict",
        "--model",
        &s(&model.join("model.json")),
        "--manifest",
        &s(&manifest),
        "--out",
        &s(&preds),
    ]));
    let text = fs::read_to_string(&preds).unwrap();
    let kept: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    fs::write(&preds, kept.join("\n") + "\n").unwrap();
    let out = votseg(&[
        "eval",
        "--predictions",
        &s(&preds),
        "--manifest",
        &s(&manifest),
        "--out",
        &s(&tmp.path().join("eval")),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn model_version_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, model) = pipeline(tmp.path());
    let file = model.join("model.json");
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    json["format_version"] = serde_json::json!(999);
    fs::write(&file, json.to_string()).unwrap();
    let out = votseg(&[
        "predict",
        "--model",
        &s(&file),
        "--manifest",
        &s(&manifest),
        "--out",
        &s(&tmp.path().join("p.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "learning_rat = 0.1\n").unwrap();
    let out = votseg(&[
        "train",
        "--manifest",
        "unused.jsonl",
        "--config",
        &s(&cfg),
        "--out",
        &s(&tmp.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn missing_manifest_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = votseg(&[
        "train",
        "--manifest",
        &s(&tmp.path().join("nope.jsonl")),
        "--out",
        &s(&tmp.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
