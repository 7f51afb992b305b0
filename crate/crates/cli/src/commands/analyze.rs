use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use splice_core::analysis::{
    bucket_losses, burstiness_report, length_histogram, power_of_two_edges, surrogate_tokens, LossRecord,
};
use splice_core::packer::DEFAULT_MAX_LEN;
use splice_core::{Corpus, PackedExample};

use super::{emit_report, input, read_jsonl};
use crate::args::{BurstinessArgs, LengthsArgs, LossesArgs};
use crate::manifest::Manifest;

/// Windows aggregated when `--max-windows` is not given.
const DEFAULT_MAX_WINDOWS: usize = 1000;

/// Writes the report, plus a manifest when it goes to a file.
fn finish<T: Serialize>(report: &T, out: Option<&Path>, m: impl FnOnce(&Path) -> Result<Manifest>) -> Result<()> {
    emit_report(out, report)?;
    if let Some(path) = out {
        m(path)?.write()?;
    }
    Ok(())
}

fn load_corpus(path: &Path, unit: splice_core::LengthUnit) -> Result<Corpus> {
    let mut corpus = Corpus::load_jsonl(path)?;
    corpus.set_length_unit(unit)?;
    Ok(corpus)
}

pub fn burstiness(args: BurstinessArgs) -> Result<()> {
    let corpus_path = input(args.corpus, "corpus")?;
    let packed_path = input(args.packed, "packed")?;
    let unit = args.length_unit.unwrap_or_default();
    let window_len = args.window_len.unwrap_or(DEFAULT_MAX_LEN);
    let max_windows = args.max_windows.unwrap_or(DEFAULT_MAX_WINDOWS);
    let seed = args.seed.unwrap_or(0);

    let corpus = load_corpus(&corpus_path, unit)?;
    let examples: Vec<PackedExample> = read_jsonl(&packed_path)?;
    let stream = surrogate_tokens(&examples, &corpus)?;
    let report = burstiness_report(&stream, window_len, max_windows, seed)
        .with_context(|| format!("stream of {} tokens", stream.len()))?;
    log::info!("mean Zipf coefficient {:.4} (std {:.4}) over {} windows", report.mean, report.std, report.n_windows);
    finish(&report, args.out.as_deref(), |out| {
        let mut m = Manifest::new("analyze burstiness", out)?;
        m.input("corpus", &corpus_path)
            .input("packed", &packed_path)
            .set("length-unit", unit.to_string())
            .set("window-len", window_len)
            .set("max-windows", max_windows)
            .seed(seed);
        Ok(m)
    })
}

pub fn losses(args: LossesArgs) -> Result<()> {
    let path = input(args.input, "input")?;
    let records: Vec<LossRecord> = read_jsonl(&path)?;
    let report = bucket_losses(records)?;
    finish(&report, args.out.as_deref(), |out| {
        let mut m = Manifest::new("analyze losses", out)?;
        m.input("input", &path);
        Ok(m)
    })
}

pub fn lengths(args: LengthsArgs) -> Result<()> {
    let unit = args.length_unit.unwrap_or_default();
    let (flag, path, lengths): (&str, _, Vec<usize>) = match (args.packed, args.corpus) {
        (Some(p), None) => {
            let p = input(Some(p), "packed")?;
            let examples: Vec<PackedExample> = read_jsonl(&p)?;
            ("packed", p, examples.iter().map(|e| e.total_len).collect())
        }
        (None, Some(p)) => {
            let p = input(Some(p), "corpus")?;
            let corpus = load_corpus(&p, unit)?;
            ("corpus", p, (0..corpus.len()).map(|i| corpus.doc_len(i)).collect())
        }
        _ => bail!("pass exactly one of --packed and --corpus"),
    };
    let edges = match args.edges {
        Some(e) => e,
        None => power_of_two_edges(lengths.iter().copied().max().unwrap_or(0)),
    };
    let report = length_histogram(lengths, &edges)?;
    finish(&report, args.out.as_deref(), |out| {
        let mut m = Manifest::new("analyze lengths", out)?;
        m.input(flag, &path).set("edges", &edges);
        if flag == "corpus" {
            m.set("length-unit", unit.to_string());
        }
        Ok(m)
    })
}
