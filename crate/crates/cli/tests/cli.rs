//! End-to-end tests of the twistkit binary: output contracts, determinism,
//! exit codes, and config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistkit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn pair_prints_nearest_neighbour() {
    let out = run(&["pair", "--ph", "f"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "f v\n");

    let out = run(&["pair", "--ph", "b"]);
    assert_eq!(stdout(&out), "b p\n");
}

#[test]
fn transcribe_hello_world_arpabet_and_ipa() {
    let out = run(&["transcribe", "--text", "Hello World"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "HH AH0 L OW1  W ER1 L D\n");

    let out = run(&["transcribe", "--text", "Hello World", "--ipa"]);
    assert_eq!(stdout(&out), "hʌloʊ wɝld\n");
}

#[test]
fn metrics_csv_contract() {
    let out = run(&["metrics", "--text", "bob bob bob"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "text,po,init_po,iped,oped,re_dale_chall,re_flesch_kincaid,re_gunning_fog,re_ari,word_count,phoneme_count"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("bob bob bob,0.222222,0.333333,0.000000,"), "{row}");
}

#[test]
fn metrics_jsonl_mode() {
    let out = run(&["metrics", "--text", "she sells sea shells", "--format", "jsonl"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["text"], "she sells sea shells");
    assert_eq!(value["word_count"], 4);
}

#[test]
fn metrics_single_word_is_a_data_error() {
    let out = run(&["metrics", "--text", "bob"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/corpus.txt");
    let out = run(&[
        "ngram-train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--order",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let provider = format!("ngram:{}", model.display());
    let args = ["decode", "--topic", "fun", "--provider", provider.as_str(), "--seed", "7"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "stdout must be byte-identical");
    assert!(!stdout(&first).trim().is_empty());
}

#[test]
fn decode_trace_file_has_step_records() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/corpus.txt");
    run(&[
        "ngram-train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    let provider = format!("ngram:{}", model.display());
    let trace = dir.path().join("trace.tsv");
    let out = run(&[
        "decode",
        "--topic",
        "sea",
        "--provider",
        &provider,
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    let first = text.lines().next().unwrap();
    let fields: Vec<&str> = first.split('\t').collect();
    assert_eq!(fields.len(), 4, "step, token, rank, reason: {first}");
    assert_eq!(fields[0], "1");
}

#[test]
fn score_matches_across_runs_and_needs_provider() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "a b a b\n").unwrap();
    run(&[
        "ngram-train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--order",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]);
    let provider = format!("ngram:{}", model.display());
    let out = run(&["score", "--text", "a b a b", "--provider", &provider]);
    assert!(out.status.success());
    // Closed form: (1/2 * 3/5 * 2/5 * 3/5 * 2/5)^(-1/5).
    let want = (0.5f64 * 0.6 * 0.4 * 0.6 * 0.4).powf(-0.2);
    let got: f64 = stdout(&out).trim().parse().unwrap();
    assert!((got - want).abs() < 1e-6);

    let out = run(&["score", "--text", "a b"]);
    assert_eq!(out.status.code(), Some(1), "missing provider is a usage error");
}

#[test]
fn pipeline_dry_run_emits_records_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("data.jsonl");
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "pipeline",
        "--topics",
        "5",
        "--dry-run",
        "--seed",
        "11",
        "--out",
        out_path.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let records = fs::read_to_string(&out_path).unwrap();
    for line in records.lines() {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(value["twister_arpabet"].as_str().unwrap().contains("  "));
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let stages: Vec<&str> = report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["stage"].as_str().unwrap())
        .collect();
    assert_eq!(
        stages,
        ["refine", "ppl_filter", "phonemic_filter", "dedup", "profanity_filter", "topic_dedup"]
    );
}

#[test]
fn filter_subcommand_partitions_records() {
    let dir = tempfile::tempdir().unwrap();
    let records_path = dir.path().join("in.jsonl");
    let records = [
        serde_json::json!({
            "tt_id": 1, "topic": "a", "source": "t", "prompt_variant": "B",
            "twister": "she sells sea shells", "twister_arpabet": "", "twister_ipa": ""
        }),
        serde_json::json!({
            "tt_id": 2, "topic": "b", "source": "t", "prompt_variant": "B",
            "twister": "sells she shells sea", "twister_arpabet": "", "twister_ipa": ""
        }),
    ];
    let text: Vec<String> = records.iter().map(|r| r.to_string()).collect();
    fs::write(&records_path, text.join("\n")).unwrap();
    let out = run(&[
        "filter",
        "--records",
        records_path.to_str().unwrap(),
        "--stages",
        "dedup",
        "--threshold",
        "60",
    ]);
    assert!(out.status.success());
    let kept: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0]["tt_id"], 1);
}

#[test]
fn print_config_shows_effective_settings_and_precedence() {
    let out = run(&["--print-config", "pair", "--ph", "f"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("lexicon = (bundled)"));
    assert!(text.contains("seed = 17"), "default seed: {text}");

    // Config file sets the seed; a flag overrides it.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tk.conf");
    fs::write(&cfg, "seed = 5\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--print-config", "pair", "--ph", "f"]);
    assert!(stdout(&out).contains("seed = 5"));
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--print-config",
        "pair",
        "--ph",
        "f",
    ]);
    assert!(stdout(&out).contains("seed = 9"), "flag beats config file");
}

#[test]
fn provider_env_var_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tk.conf");
    fs::write(&cfg, "provider = ngram:/nonexistent.bin\n").unwrap();
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--print-config", "pair", "--ph", "f"])
        .env("TWISTKIT_PROVIDER_URL", "http://127.0.0.1:1/v1")
        .output()
        .unwrap();
    assert!(stdout(&out).contains("provider = http://127.0.0.1:1/v1"));
}

#[test]
fn exit_codes() {
    // Unknown flag: usage error, exit 1.
    let out = run(&["metrics", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    // Unknown subcommand: usage error, exit 1.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    // Missing asset file: data error, exit 2.
    let out = run(&["--lexicon", "/definitely/not/here.dict", "pair", "--ph", "f"]);
    assert_eq!(out.status.code(), Some(2));
    // Help exits 0.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    // Unknown phoneme: data error.
    let out = run(&["pair", "--ph", "q"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn vocab_lists_candidates_with_initials() {
    let out = run(&["vocab", "--topic", "rural brewery", "--ph", "b", "-n", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "b p");
    let mut n = 0;
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3, "{line}");
        assert!(fields[1] == "b" || fields[1] == "p");
        n += 1;
    }
    assert!(n > 0 && n <= 8);
}

#[test]
fn serve_check_requires_http_provider() {
    let out = run(&["serve-check"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.txt");
    fs::write(&model, "twistkit-ngram v1\norder 1\nk 1\nvocab a\n").unwrap();
    let provider = format!("ngram:{}", model.display());
    let out = run(&["serve-check", "--provider", &provider]);
    assert_eq!(out.status.code(), Some(1));
}
