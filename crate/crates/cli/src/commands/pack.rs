use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::json;
use splice_core::packer::{baseline_pack, domrnd_pack, materialize_text, repo_pack, splice_pack_all};
use splice_core::retrieval::ivf::EmbeddingRetriever;
use splice_core::{
    Bm25Index, Corpus, EmbeddingIndex, Method, NeighborTable, PackOutput, PackingConfig, RepoGraph, Retriever,
};

use super::index::bm25_params;
use super::{input, require, write_json, write_jsonl};
use crate::args::{PackArgs, RetrieverKind};
use crate::manifest::{sibling, Manifest};

/// Default number of IVF cells probed per query.
const DEFAULT_NPROBE: usize = 32;

pub fn run(args: PackArgs) -> Result<()> {
    let corpus_path = input(args.corpus.clone(), "corpus")?;
    let out = require(args.out.clone(), "out")?;
    let defaults = PackingConfig::default();
    let config = PackingConfig {
        method: args.method.unwrap_or(defaults.method),
        k: args.k.unwrap_or(defaults.k),
        max_len: args.max_len.unwrap_or(defaults.max_len),
        order: args.order.unwrap_or(defaults.order),
        seed: args.seed.unwrap_or(defaults.seed),
        domrnd_char_bound: args.char_bound.unwrap_or(defaults.domrnd_char_bound),
    };
    config.validate()?;
    let unit = args.length_unit.unwrap_or_default();

    let mut corpus = Corpus::load_jsonl(&corpus_path)?;
    if corpus.is_empty() {
        bail!("empty corpus");
    }
    corpus.set_length_unit(unit)?;

    let mut m = Manifest::new("pack", &out)?;
    m.input("corpus", &corpus_path)
        .set("method", config.method.to_string())
        .set("length-unit", unit.to_string())
        .seed(config.seed);

    let packed = match config.method {
        Method::Splice => {
            m.set("k", config.k).set("max-len", config.max_len).set("order", config.order.to_string());
            splice(&args, &mut corpus, &config, &mut m)?
        }
        Method::Baseline => {
            m.set("max-len", config.max_len);
            baseline_pack(&mut corpus, config.max_len, config.seed)?
        }
        Method::Domrnd => {
            m.set("char-bound", config.domrnd_char_bound);
            domrnd_pack(&mut corpus, config.seed, config.domrnd_char_bound)?
        }
        Method::Repo => {
            m.set("max-len", config.max_len);
            let graph = RepoGraph::from_corpus(&corpus);
            repo_pack(&mut corpus, &graph, config.max_len)?
        }
    };

    super::ensure_parent(&out)?;
    write_jsonl(&out, &packed.examples)?;
    let stats_path = sibling(&out, "stats.json");
    write_json(
        &stats_path,
        &json!({
            "documents": corpus.len(),
            "length_unit": unit,
            "examples": packed.stats.examples,
            "consumed_docs": packed.stats.consumed_docs,
            "discarded_len": packed.stats.discarded_len,
            "mean_len": packed.stats.mean_len,
        }),
    )?;
    m.side_output(&stats_path);
    if let Some(text_path) = &args.materialize {
        materialize(&packed, &corpus, text_path)?;
        m.output("materialize", text_path);
    }
    info!(
        "packed {} documents into {} examples (mean length {:.1} {unit})",
        packed.stats.consumed_docs, packed.stats.examples, packed.stats.mean_len
    );
    m.write()?;
    Ok(())
}

fn splice(args: &PackArgs, corpus: &mut Corpus, config: &PackingConfig, m: &mut Manifest) -> Result<PackOutput> {
    let kind = args.retriever.unwrap_or(RetrieverKind::Bm25);
    m.set("retriever", kind.as_str());
    // Neighbour lists depend only on the corpus, so they are computed for
    // every document up front, in parallel, before the sequential packing.
    let table = match kind {
        RetrieverKind::Bm25 => {
            let index = match &args.index {
                Some(p) => {
                    super::existing(p)?;
                    m.input("index", p);
                    let index = Bm25Index::load(p)?;
                    index.check_matches(corpus).context("index was built from a different corpus")?;
                    index
                }
                None => {
                    let params = bm25_params(args.bm25_k1, args.bm25_b, args.query_cap);
                    m.set("bm25-k1", params.k1).set("bm25-b", params.b).set("query-cap", params.query_cap);
                    Bm25Index::build(corpus, params)?
                }
            };
            precompute(&index, corpus, config.k)?
        }
        RetrieverKind::Embed => {
            let p = input(args.index.clone(), "index")?;
            m.input("index", &p);
            let index = EmbeddingIndex::load(&p)?;
            let nprobe = args.nprobe.unwrap_or(DEFAULT_NPROBE.min(index.nlist().max(1)));
            m.set("nprobe", nprobe);
            let retriever = EmbeddingRetriever::new(&index, corpus, nprobe)?;
            precompute(&retriever, corpus, config.k)?
        }
        RetrieverKind::Repo => precompute(&RepoGraph::from_corpus(corpus), corpus, config.k)?,
    };
    Ok(splice_pack_all(corpus, &table, config)?)
}

fn precompute<R: Retriever>(retriever: &R, corpus: &Corpus, k: usize) -> Result<NeighborTable> {
    Ok(NeighborTable::precompute(retriever, corpus, k)?)
}

fn materialize(packed: &PackOutput, corpus: &Corpus, path: &Path) -> Result<()> {
    let texts = packed
        .examples
        .iter()
        .map(|e| materialize_text(e, corpus).map(|text| json!({ "text": text })))
        .collect::<splice_core::Result<Vec<_>>>()?;
    write_jsonl(path, &texts)
}
