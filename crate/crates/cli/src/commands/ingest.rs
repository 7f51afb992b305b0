use anyhow::Result;
use log::info;
use serde_json::json;
use splice_core::corpus::{
    attach_token_lengths, dedup_exact, ingest_jsonl, ingest_repo_tree, DEFAULT_MAX_CHARS, DEFAULT_REPO_SPLIT_BYTES,
};

use super::{existing, input, require, write_json};
use crate::args::IngestArgs;
use crate::manifest::{sibling, Manifest};

pub fn run(args: IngestArgs) -> Result<()> {
    let source = input(args.input, "input")?;
    let out = require(args.out, "out")?;
    let max_chars = args.max_chars.unwrap_or(DEFAULT_MAX_CHARS);
    let split = args.repo_split_bytes.unwrap_or(DEFAULT_REPO_SPLIT_BYTES);
    let from_tree = source.is_dir();

    let (mut corpus, mut skips) =
        if from_tree { ingest_repo_tree(&source, max_chars, split)? } else { ingest_jsonl(&source, max_chars)? };
    if args.dedup {
        let (kept, removed) = dedup_exact(corpus)?;
        corpus = kept;
        skips.dropped_duplicate += removed;
    }
    let mut unmatched = None;
    if let Some(sidecar) = &args.token_lengths {
        existing(sidecar)?;
        let (with_lengths, n) = attach_token_lengths(corpus, sidecar)?;
        corpus = with_lengths;
        unmatched = Some(n);
    }

    super::ensure_parent(&out)?;
    corpus.write_jsonl(&out)?;
    let skips_path = sibling(&out, "skips.json");
    write_json(
        &skips_path,
        &json!({
            "documents": corpus.len(),
            "dropped_too_long": skips.dropped_too_long,
            "dropped_duplicate": skips.dropped_duplicate,
            "unreadable": skips.unreadable,
            "unmatched_token_lengths": unmatched,
        }),
    )?;
    info!(
        "ingested {} documents ({} too long, {} duplicates, {} unreadable)",
        corpus.len(),
        skips.dropped_too_long,
        skips.dropped_duplicate,
        skips.unreadable
    );

    let mut m = Manifest::new("ingest", &out)?;
    m.input("input", &source).set("max-chars", max_chars).set("dedup", args.dedup);
    if from_tree {
        m.set("repo-split-bytes", split);
    }
    if let Some(sidecar) = &args.token_lengths {
        m.input("token-lengths", sidecar);
    }
    m.side_output(&skips_path);
    m.write()?;
    Ok(())
}
