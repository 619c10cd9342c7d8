mod common;

use std::process::{Command, Output};

use common::Fixture;
use iconsearch_core::eval::{write_responses, Criterion, PreferenceRecord, Preferred};
use serde_json::Value;

fn iconsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iconsearch"))
        .args(args)
        .env_remove("ICONSEARCH_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(fx: &Fixture, name: &str) -> String {
    fx.path(name).to_string_lossy().into_owned()
}

#[test]
fn ingest_then_query() {
    let fx = Fixture::new();
    let out = iconsearch(&[
        "ingest",
        "--embeddings",
        &path(&fx, "raw.icnx"),
        "--metadata",
        &path(&fx, "raw.jsonl"),
        "--out",
        &path(&fx, "corpus"),
    ]);
    let summary = stdout_json(&out);
    assert_eq!(summary["n_images"], 16);
    assert_eq!(summary["dim"], 8);
    assert!(fx.path("corpus/embeddings.icnx").exists());

    let config = fx.path("served.conf");
    std::fs::write(&config, "scheme = scheme.tsv\ncorpus = corpus\nadapter_table = table.jsonl\n").unwrap();
    let config = config.to_string_lossy().into_owned();
    let result = stdout_json(&iconsearch(&[
        "query", "--config", &config, "--mode", "multimodal", "--q", "street", "--k", "10",
    ]));
    assert_eq!(result["notations"][0]["code"], "25I141");
    assert_eq!(result["notations"][1]["code"], "31D14");

    let tfidf = stdout_json(&iconsearch(&["query", "--config", &config, "--mode", "tfidf", "--q", "adult man"]));
    assert_eq!(tfidf["notations"][0]["code"], "31D14");
}

#[test]
fn mismatched_ingest_fails() {
    let fx = Fixture::new();
    let metadata = std::fs::read_to_string(fx.path("raw.jsonl")).unwrap();
    let short: String = metadata.lines().take(15).map(|l| format!("{l}\n")).collect();
    std::fs::write(fx.path("short.jsonl"), short).unwrap();
    let out = iconsearch(&[
        "ingest",
        "--embeddings",
        &path(&fx, "raw.icnx"),
        "--metadata",
        &path(&fx, "short.jsonl"),
        "--out",
        &path(&fx, "corpus"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row count mismatch"), "{stderr}");
    assert!(!fx.path("corpus/metadata.jsonl").exists());
}

#[test]
fn help_exits_zero() {
    let out = iconsearch(&["serve", "--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("--config"));
}

#[test]
fn query_errors_exit_one() {
    let fx = Fixture::new();
    let config = fx.config("adapter_table = table.jsonl\n").to_string_lossy().into_owned();
    let out = iconsearch(&["query", "--config", &config, "--q", "cathedral"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cathedral"));

    let missing = iconsearch(&["query", "--config", &path(&fx, "nope.conf"), "--q", "street"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn eval_sheet_and_tally() {
    let fx = Fixture::new();
    let config = fx.config("adapter_table = table.jsonl\n").to_string_lossy().into_owned();
    std::fs::write(fx.path("queries.txt"), "street\ndog\tdog.jpg\n").unwrap();
    let run = |sheet: &str, key: &str| {
        stdout_json(&iconsearch(&[
            "eval-sheet",
            "--config",
            &config,
            "--queries",
            &path(&fx, "queries.txt"),
            "--seed",
            "4",
            "--sheet",
            &path(&fx, sheet),
            "--key",
            &path(&fx, key),
        ]))
    };
    let summary = run("sheet.csv", "key.jsonl");
    assert_eq!((summary["rows"].as_u64(), summary["failures"].as_u64()), (Some(2), Some(0)));
    run("again.csv", "again.jsonl");
    assert_eq!(std::fs::read(fx.path("sheet.csv")).unwrap(), std::fs::read(fx.path("again.csv")).unwrap());
    let sheet = std::fs::read_to_string(fx.path("sheet.csv")).unwrap();
    assert!(sheet.starts_with("row_id,query,image_ref,left_1,"));
    assert!(sheet.contains("25I141: street"));

    let responses = [
        PreferenceRecord::new(1, Preferred::Left, Some(Criterion::Preciseness)).unwrap(),
        PreferenceRecord::new(2, Preferred::Right, None).unwrap(),
        PreferenceRecord::new(2, Preferred::None, None).unwrap(),
    ];
    let mut bytes = Vec::new();
    write_responses(&responses, &mut bytes).unwrap();
    std::fs::write(fx.path("responses.csv"), bytes).unwrap();
    let tally = stdout_json(&iconsearch(&[
        "eval-tally",
        "--responses",
        &path(&fx, "responses.csv"),
        "--key",
        &path(&fx, "key.jsonl"),
        "--json",
    ]));
    let total = tally["system_a"]["preferences"].as_u64().unwrap() + tally["system_b"]["preferences"].as_u64().unwrap();
    assert_eq!(total, 2);
    let table = iconsearch(&["eval-tally", "--responses", &path(&fx, "responses.csv"), "--key", &path(&fx, "key.jsonl")]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("#Preciseness"));
}
