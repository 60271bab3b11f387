//! The command surface: library entry points and the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use biodisamb::cli::commands::{CORPUS_FILE, CORPUS_STATS_JSON, MODEL_FILE, TEST_FILE, VOCAB_FILE};
use biodisamb::cli::{cmd_build_corpus, cmd_evaluate, cmd_predict, cmd_synthesize, RunConfig};
use biodisamb::corpus::{ConceptType, CorpusStats};
use biodisamb::models::ModelKind;

fn config_in(dir: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.paths.documents = dir.join("documents.pubtator");
    c.paths.records = dir.join("records.tsv");
    c.paths.work_dir = dir.join("work");
    c
}

fn biodisamb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biodisamb"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn config_hash(out: &Output) -> String {
    let text = stdout(out);
    let line = text.lines().find(|l| l.starts_with("config hash: ")).expect("hash line");
    line["config hash: ".len()..].to_string()
}

/// Eight generated mentions scored by the default-order rule, with the
/// corpus itself as the test split. Gold and distractor per mention follow
/// from the generator's cycling:
///
/// | gold     | distractor | rule says |
/// |----------|------------|-----------|
/// | Gene     | Disease    | Gene      |
/// | Gene     | Chemical   | Gene      |
/// | Disease  | Gene       | Gene      |
/// | Disease  | Chemical   | Chemical  |
/// | Chemical | Gene       | Gene      |
/// | Species  | Gene       | Species   |
/// | Mutation | Gene       | Mutation  |
/// | CellLine | Gene       | Gene      |
///
/// 4 of 8 right, so micro F1 = 0.5. Gene: 5 predicted, 2 right, support 2,
/// so P = 0.4, R = 1, F1 = 0.8 / 1.4.
#[test]
fn rule_evaluation_matches_hand_count_without_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(dir.path());
    config.synthetic.class_counts = [2, 2, 1, 1, 1, 1];
    config.model.kind = ModelKind::Rule;
    cmd_synthesize(&config).unwrap();
    cmd_build_corpus(&config).unwrap();
    let work = &config.paths.work_dir;
    fs::copy(work.join(CORPUS_FILE), work.join(TEST_FILE)).unwrap();
    assert!(!work.join(MODEL_FILE).exists() && !work.join(VOCAB_FILE).exists());

    let preds = cmd_predict(&config).unwrap();
    assert_eq!(preds.len(), 8);
    let summary = cmd_evaluate(&config).unwrap();
    assert_eq!(summary.micro.f1, 0.5);
    let gene = summary.per_class.iter().find(|m| m.concept_type == ConceptType::Gene).unwrap();
    assert_eq!((gene.predicted, gene.support), (5, 2));
    assert!((gene.precision - 0.4).abs() < 1e-12);
    assert_eq!(gene.recall, 1.0);
    assert!((gene.f1 - 0.8 / 1.4).abs() < 1e-12);
    let cell = summary.per_class.iter().find(|m| m.concept_type == ConceptType::CellLine).unwrap();
    assert!(cell.precision_undefined && cell.f1 == 0.0);
}

#[test]
fn statistics_sum_to_corpus_lines() {
    let dir = tempfile::tempdir().unwrap();
    let set = |kv: &str| ["--set".to_string(), kv.to_string()];
    let mut args: Vec<String> = vec!["synthesize".into()];
    args.extend(set("synthetic.class_counts=[9, 7, 5, 4, 3, 2]"));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(biodisamb(dir.path(), &args).status.success());
    let out = biodisamb(dir.path(), &["build-corpus"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("Total"));

    let lines = fs::read_to_string(dir.path().join("work").join(CORPUS_FILE)).unwrap().lines().count();
    let stats: CorpusStats =
        serde_json::from_str(&fs::read_to_string(dir.path().join("work").join(CORPUS_STATS_JSON)).unwrap()).unwrap();
    let rows: usize = stats.per_type.values().map(|s| s.ambiguous_mentions).sum();
    assert_eq!(lines, 30);
    assert_eq!(rows, lines);
    assert_eq!(stats.total.ambiguous_mentions, lines);
}

#[test]
fn every_command_prints_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = biodisamb(dir.path(), &["synthesize", "--set", "synthetic.class_counts=[3,3,3,3,3,3]"]);
    let b = biodisamb(dir.path(), &["build-corpus", "--set", "synthetic.class_counts=[3,3,3,3,3,3]"]);
    let c = biodisamb(dir.path(), &["build-corpus"]);
    for out in [&a, &b, &c] {
        assert!(out.status.success());
        let h = config_hash(out);
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    }
    assert_eq!(config_hash(&a), config_hash(&b));
    assert_ne!(config_hash(&b), config_hash(&c));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[split]\nseed = 1\ntest_fraction = 0.3\n").unwrap();
    let out = biodisamb(dir.path(), &["--config", "run.toml", "--set", "split.seed=2", "config"]);
    assert!(out.status.success());
    let resolved = RunConfig::from_toml_str(&stdout(&out)).unwrap();
    assert_eq!(resolved.split.seed, 2);
    assert_eq!(resolved.split.test_fraction, 0.3);
}

#[test]
fn failures_exit_non_zero_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = biodisamb(dir.path(), &["build-corpus"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("documents.pubtator"));
    assert!(!dir.path().join("work").join(CORPUS_FILE).exists());

    let bad = biodisamb(dir.path(), &["--set", "split.no_such_key=1", "config"]);
    assert!(!bad.status.success());
    let out = biodisamb(dir.path(), &["--set", "model.kind=maxent", "predict"]);
    assert!(!out.status.success());
}

#[test]
fn retraining_with_the_same_seed_gives_the_same_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let counts = ["--set", "synthetic.class_counts=[12,12,10,10,8,8]"];
    let maxent = ["--set", "model.kind=maxent"];
    for cmd in ["synthesize", "build-corpus", "split"] {
        assert!(biodisamb(dir.path(), &[&[cmd][..], &counts].concat()).status.success());
    }
    let train = || {
        let out = biodisamb(dir.path(), &[&["train"][..], &counts, &maxent].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(dir.path().join("work").join(MODEL_FILE)).unwrap()
    };
    let first = train();
    assert_eq!(first, train());

    let out = biodisamb(dir.path(), &[&["predict"][..], &counts, &maxent].concat());
    assert!(out.status.success());
    let out = biodisamb(dir.path(), &[&["evaluate"][..], &counts, &maxent].concat());
    assert!(out.status.success());
    assert!(stdout(&out).contains("Macro average"));
}
