use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use codemix::synth::{switching_corpus, SyntheticConfig};
use tempfile::TempDir;

const SMALL: &str = "\
1\tkoi_hi to_hi pray_en karo_hi mere_hi liye_hi bhi_hi
0\tthis_en is_en great_en #AadabArzHai_hi
1\tyaar_hi party_en karo_hi @dost_rest
0\tgood_en morning_en http://x.co_rest

1\tbahut_hi sad_en hai_hi :P_rest
0\tnice_en day_en
";

fn codemix(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codemix"))
        .args(args)
        .current_dir(dir)
        .env_remove("CODEMIX_CONFIG")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn synthetic(dir: &TempDir, n: usize) -> PathBuf {
    let corpus = switching_corpus(&SyntheticConfig {
        utterances: n,
        ..Default::default()
    });
    let mut buf = Vec::new();
    corpus.write_to(&mut buf).unwrap();
    write(dir, "synth.tsv", std::str::from_utf8(&buf).unwrap())
}

#[test]
fn stats_table_has_one_column_per_corpus() {
    let dir = TempDir::new().unwrap();
    write(&dir, "humour.tsv", SMALL);
    write(&dir, "sarcasm.tsv", SMALL);
    let out = ok(&codemix(&["stats", "humour.tsv", "sarcasm.tsv"], dir.path()));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "statistic\thumour\tsarcasm");
    assert_eq!(lines[1], "p(T|Q)\t1.0000\t1.0000");
    assert_eq!(lines.len(), 6);
}

#[test]
fn empty_corpus_is_a_clean_error() {
    let dir = TempDir::new().unwrap();
    write(&dir, "empty.tsv", "");
    let out = codemix(&["stats", "empty.tsv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty corpus"));
}

#[test]
fn malformed_line_reports_its_line_number() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.tsv", "1\tok_hi\n\n2\tnope_en\n");
    let out = codemix(&["stats", "bad.tsv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn features_match_the_worked_example() {
    let dir = TempDir::new().unwrap();
    write(&dir, "a.tsv", SMALL);
    let out = ok(&codemix(&["features", "a.tsv"], dir.path()));
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], 0);
    assert_eq!(first["q"], true);
    assert_eq!(first["v"], 2);
    assert!((first["stddev_hi_en"].as_f64().unwrap() - 0.699854212223765).abs() < 1e-12);
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    write(&dir, "a.tsv", SMALL);
    write(&dir, "cfg.toml", "format = \"json\"\n");
    let from_file = ok(&codemix(&["--config", "cfg.toml", "stats", "a.tsv"], dir.path()));
    assert!(from_file.starts_with('['));
    let flag_wins = ok(&codemix(
        &["--config", "cfg.toml", "--format", "tsv", "stats", "a.tsv"],
        dir.path(),
    ));
    assert!(flag_wins.starts_with("statistic"));
    write(&dir, "typo.toml", "formatt = \"json\"\n");
    assert!(!codemix(&["--config", "typo.toml", "stats", "a.tsv"], dir.path())
        .status
        .success());
}

#[test]
fn train_then_eval_round_trips() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic(&dir, 300);
    let corpus = corpus.to_str().unwrap();
    ok(&codemix(
        &["train", corpus, "-m", "m.txt", "--export-vectors", "v.txt"],
        dir.path(),
    ));
    let model = std::fs::read_to_string(dir.path().join("m.txt")).unwrap();
    assert!(model.starts_with("codemix-linear-model 1\n"));
    assert!(dir.path().join("m.txt.pipeline.json").exists());
    let vectors = std::fs::read_to_string(dir.path().join("v.txt")).unwrap();
    assert_eq!(vectors.lines().count(), 300);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&codemix(&["eval", corpus, "-m", "m.txt"], dir.path()))).unwrap();
    assert!(report["macro_f1"].as_f64().unwrap() > 0.6);
}

#[test]
fn eval_rejects_a_model_of_the_wrong_dimension() {
    let dir = TempDir::new().unwrap();
    write(&dir, "a.tsv", SMALL);
    ok(&codemix(
        &["train", "a.tsv", "-m", "m.txt", "--min-count", "1"],
        dir.path(),
    ));
    let path = dir.path().join("m.txt");
    let mut model = std::fs::read_to_string(&path).unwrap();
    model.push_str("0.5\n");
    std::fs::write(&path, model).unwrap();
    let out = codemix(&["eval", "a.tsv", "-m", "m.txt"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn subsample_keeps_every_positive() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic(&dir, 300);
    let corpus = corpus.to_str().unwrap();
    ok(&codemix(
        &["subsample", corpus, "-o", "kept.tsv", "--tau", "0.2"],
        dir.path(),
    ));
    let original = std::fs::read_to_string(corpus).unwrap();
    let kept = std::fs::read_to_string(dir.path().join("kept.tsv")).unwrap();
    let positives = |s: &str| s.lines().filter(|l| l.starts_with('1')).count();
    assert_eq!(positives(&kept), positives(&original));
    assert!(kept.lines().count() < original.lines().count());
    assert!(kept.lines().all(|l| original.lines().any(|o| o == l)));
}

#[test]
fn cv_ablation_reports_a_delta() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic(&dir, 400);
    let out = ok(&codemix(
        &[
            "cv",
            corpus.to_str().unwrap(),
            "--k",
            "5",
            "--ablate-switching",
            "--format",
            "json",
        ],
        dir.path(),
    ));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let without = report["without_switching"]["mean_macro_f1"].as_f64().unwrap();
    let with = report["with_switching"]["mean_macro_f1"].as_f64().unwrap();
    assert!((report["delta"].as_f64().unwrap() - (with - without)).abs() < 1e-12);
    assert_eq!(report["with_switching"]["folds"].as_array().unwrap().len(), 5);
}
