use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use splice_core::{Bm25Index, EmbeddingIndex, PackedExample};

use super::{emit_report, existing, read_jsonl};

/// Identifies an artifact by its leading bytes and prints a JSON summary.
pub fn run(path: &Path) -> Result<()> {
    existing(path)?;
    let mut head = [0u8; 8];
    let n =
        File::open(path).and_then(|mut f| f.read(&mut head)).with_context(|| format!("reading {}", path.display()))?;
    let summary = match &head[..n] {
        b"SPLCBM25" => {
            let index = Bm25Index::load(path)?;
            let p = index.params();
            json!({
                "kind": "bm25-index",
                "documents": index.n_docs(),
                "terms": index.vocabulary_size(),
                "postings": index.total_postings(),
                "avg_doc_len": index.avg_doc_len(),
                "k1": p.k1,
                "b": p.b,
                "query_cap": p.query_cap,
            })
        }
        b"SPLCIVF1" | b"SPLCEMB1" => {
            let index = EmbeddingIndex::load(path)?;
            json!({
                "kind": if index.is_trained() { "ivf-index" } else { "embeddings" },
                "vectors": index.len(),
                "dim": index.dim(),
                "nlist": index.is_trained().then(|| index.nlist()),
            })
        }
        _ => inspect_json(path)?,
    };
    emit_report(None, &summary)
}

fn first_record(path: &Path) -> Result<Option<Value>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(serde_json::from_str(&line).ok());
        }
    }
    Ok(None)
}

fn inspect_json(path: &Path) -> Result<Value> {
    // Manifests and reports are pretty-printed; JSONL records are one line each.
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.starts_with("{\n") {
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let kind = if v.get("tool").is_some() { "manifest" } else { "report" };
        return Ok(json!({ "kind": kind, "content": v }));
    }
    let Some(first) = first_record(path)? else {
        bail!("{}: not a recognised artifact", path.display());
    };
    if first.get("segments").is_some() {
        let examples: Vec<PackedExample> = read_jsonl(path)?;
        let mut methods = BTreeMap::new();
        for e in &examples {
            *methods.entry(e.method.to_string()).or_insert(0usize) += 1;
        }
        let total: usize = examples.iter().map(|e| e.total_len).sum();
        let segments: usize = examples.iter().map(|e| e.segments.len()).sum();
        return Ok(json!({
            "kind": "packed-examples",
            "examples": examples.len(),
            "segments": segments,
            "total_len": total,
            "max_len": examples.iter().map(|e| e.total_len).max(),
            "methods": methods,
        }));
    }
    if first.get("prompt").is_some() {
        let records: Vec<Value> = read_jsonl(path)?;
        let mut positions = BTreeMap::new();
        for r in &records {
            *positions.entry(r["position"].as_u64().unwrap_or(0)).or_insert(0usize) += 1;
        }
        return Ok(json!({
            "kind": "kv-suite",
            "prompts": records.len(),
            "n_pairs": first["n_pairs"],
            "per_position": positions,
        }));
    }
    if first.get("text").is_some() && first.get("id").is_some() {
        let corpus = splice_core::Corpus::load_jsonl(path)?;
        let docs = corpus.documents();
        return Ok(json!({
            "kind": "corpus",
            "documents": docs.len(),
            "chars": docs.iter().map(|d| d.char_len()).sum::<usize>(),
            "with_token_len": docs.iter().filter(|d| d.token_len().is_some()).count(),
            "with_path": docs.iter().filter(|d| d.path().is_some()).count(),
            "with_domain": docs.iter().filter(|d| d.domain().is_some()).count(),
        }));
    }
    if first.get("pos").is_some() && first.get("loss").is_some() {
        let n = read_jsonl::<Value>(path)?.len();
        return Ok(json!({ "kind": "loss-records", "records": n }));
    }
    bail!("{}: not a recognised artifact", path.display())
}
