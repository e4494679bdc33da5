use std::path::Path;
use std::process::{Command, Output};

fn bin(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reuseknn"))
        .current_dir(cwd)
        .args(args)
        .output()
        .unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = bin(cwd, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn end_to_end_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let msg = ok(
        d,
        &[
            "synth", "--users", "40", "--items", "30", "--density", "0.3", "--popularity", "1", "--seed", "4", "-o",
            "ratings.csv",
        ],
    );
    assert!(msg.starts_with("wrote 360 ratings"), "{msg}");

    let desc = ok(d, &["describe", "-i", "ratings.csv"]);
    assert!(desc.contains("users\t40\n"));
    assert!(desc.contains("ratings\t360\n"));
    let json: serde_json::Value = serde_json::from_str(&ok(d, &["--format", "json", "describe", "-i", "ratings.csv"])).unwrap();
    assert_eq!(json["items"], 30);

    std::fs::write(
        d.join("exp.toml"),
        r#"methods = ["UserKNN", "Gain", "Gain_DP"]
k = [4]
folds = [0, 1]
output = "out"

[dataset]
kind = "file"
path = "ratings.csv"
scale = "1..5"
"#,
    )
    .unwrap();
    let run = ok(d, &["run", "-c", "exp.toml", "--threads", "1"]);
    assert!(run.lines().next().unwrap().starts_with("fold\tmethod\tk\ttau"));
    assert_eq!(run.lines().filter(|l| l.contains("Gain_DP")).count(), 2);
    assert!(d.join("out/manifest.json").exists());

    let cmp = ok(d, &["compare", "--run", "out", "--a", "Gain", "--b", "UserKNN", "--metric", "neighbors", "--tail", "less"]);
    assert!(cmp.contains("Gain vs UserKNN on neighbors k=4"), "{cmp}");
    let cmp: serde_json::Value = serde_json::from_str(&ok(
        d,
        &["--format", "json", "compare", "--run", "out", "--a", "Gain", "--b", "UserKNN", "--metric", "mae"],
    ))
    .unwrap();
    assert_eq!(cmp.as_array().unwrap().len(), 1);

    let ledger = std::fs::read_dir(d.join("out/ledgers")).unwrap().next().unwrap().unwrap().path();
    let tau = ok(d, &["estimate-tau", "--ledger", ledger.to_str().unwrap()]);
    assert!(tau.trim().parse::<f64>().unwrap() > 0.0);
    let by_cfg = ok(d, &["estimate-tau", "--config", "exp.toml"]);
    assert_eq!(by_cfg.lines().count(), 3);

    let train = ok(d, &["train-embeddings", "-i", "ratings.csv", "-o", "model.json", "--epochs", "3"]);
    assert!(train.starts_with("trained 3 epochs"), "{train}");
    assert!(d.join("model.json").exists());
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = bin(d, &["describe", "-i", "missing.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(d.join("bad.csv"), "user_id,item_id,rating\na,b,3\na,c,7\n").unwrap();
    let out = bin(d, &["describe", "-i", "bad.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv"));

    let out = bin(d, &["estimate-tau"]);
    assert!(!out.status.success());
}
