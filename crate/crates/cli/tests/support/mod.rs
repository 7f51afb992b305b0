//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splice_core::retrieval::ivf::write_embeddings;
use splice_core::synthetic::{clustered_vectors, random_corpus};

pub fn splice_bin() -> &'static str {
    env!("CARGO_BIN_EXE_splice")
}

/// Runs the binary in `dir`; panics with its stderr unless it succeeds.
pub fn splice_ok(dir: &Path, args: &[&str]) -> Output {
    let out = splice(dir, args);
    assert!(out.status.success(), "splice {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn splice(dir: &Path, args: &[&str]) -> Output {
    Command::new(splice_bin()).args(args).current_dir(dir).env("SPLICE_LOG", "error").output().expect("spawn splice")
}

/// Raw fixture inputs: 100 documents across a few repositories, matching
/// embeddings, a mixture spec and per-position losses.
pub fn write_fixture(dir: &Path) {
    fs::create_dir_all(dir.join("in")).unwrap();
    let corpus = random_corpus(100, 1500, 7);
    corpus.write_jsonl(&dir.join("in/raw.jsonl")).unwrap();
    let ids: Vec<String> = corpus.documents().iter().map(|d| d.id().to_string()).collect();
    let (_, vectors) = clustered_vectors(ids.len(), 16, 6, 0.3, 7);
    write_embeddings(&dir.join("in/emb.bin"), 16, &ids, &vectors).unwrap();
    fs::write(
        dir.join("in/mix.json"),
        r#"{"parts": [
            {"name": "splice", "weight": 0.5, "path": "../packed/splice.jsonl"},
            {"name": "embed", "weight": 0.25, "path": "../packed/embed.jsonl"},
            {"name": "baseline", "weight": 0.25, "path": "../packed/baseline.jsonl"}
        ], "separator": "bos_eos", "bos_id": 1, "eos_id": 2}"#,
    )
    .unwrap();
    let losses: String =
        (0..3000u64).map(|p| format!("{{\"pos\":{},\"loss\":{}}}\n", p * 11, 1.0 + (p % 7) as f64 / 8.0)).collect();
    fs::write(dir.join("in/losses.jsonl"), losses).unwrap();
    fs::write(dir.join("pipeline.toml"), "seed = 5\n\n[pack]\nmax-len = 4000\nk = 2\n").unwrap();
}

/// The full pipeline over the fixture in `dir`, with `threads` workers.
pub fn run_pipeline(dir: &Path, threads: usize) {
    let t = threads.to_string();
    let run = |args: &[&str]| {
        let mut all = vec!["--threads", t.as_str(), "--config", "pipeline.toml"];
        all.extend_from_slice(args);
        splice_ok(dir, &all);
    };
    run(&["ingest", "--input", "in/raw.jsonl", "--out", "corpus/corpus.jsonl", "--dedup"]);
    run(&["index", "--corpus", "corpus/corpus.jsonl", "--out", "index/bm25.idx"]);
    run(&[
        "index",
        "--retriever",
        "embed",
        "--embeddings",
        "in/emb.bin",
        "--corpus",
        "corpus/corpus.jsonl",
        "--nlist",
        "8",
        "--out",
        "index/ivf.idx",
    ]);
    run(&[
        "pack",
        "--corpus",
        "corpus/corpus.jsonl",
        "--index",
        "index/bm25.idx",
        "--out",
        "packed/splice.jsonl",
        "--materialize",
        "packed/splice.text.jsonl",
    ]);
    run(&[
        "pack",
        "--corpus",
        "corpus/corpus.jsonl",
        "--retriever",
        "embed",
        "--index",
        "index/ivf.idx",
        "--nprobe",
        "3",
        "--order",
        "shuffle",
        "--out",
        "packed/embed.jsonl",
    ]);
    run(&["pack", "--corpus", "corpus/corpus.jsonl", "--method", "baseline", "--out", "packed/baseline.jsonl"]);
    run(&[
        "pack",
        "--corpus",
        "corpus/corpus.jsonl",
        "--method",
        "domrnd",
        "--char-bound",
        "3000",
        "--out",
        "packed/domrnd.jsonl",
    ]);
    run(&["pack", "--corpus", "corpus/corpus.jsonl", "--method", "repo", "--out", "packed/repo.jsonl"]);
    run(&["mix", "--spec", "in/mix.json", "--out", "mixed/mixed.jsonl"]);
    run(&[
        "analyze",
        "burstiness",
        "--corpus",
        "corpus/corpus.jsonl",
        "--packed",
        "mixed/mixed.jsonl",
        "--window-len",
        "400",
        "--max-windows",
        "20",
        "--out",
        "reports/burstiness.json",
    ]);
    run(&["analyze", "lengths", "--packed", "packed/splice.jsonl", "--out", "reports/lengths.json"]);
    run(&["analyze", "losses", "--input", "in/losses.jsonl", "--out", "reports/losses.json"]);
    run(&["gen-kv", "--n-pairs", "20", "--per-position", "3", "--out", "kv/kv.jsonl"]);
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}
