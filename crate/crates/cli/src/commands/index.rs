use std::collections::HashSet;

use anyhow::{bail, Result};
use log::{info, warn};
use splice_core::retrieval::ivf::{DEFAULT_NLIST, DEFAULT_TRAIN_SAMPLE};
use splice_core::{Bm25Index, Bm25Params, Corpus, EmbeddingIndex};

use super::{input, require};
use crate::args::{IndexArgs, RetrieverKind};
use crate::manifest::Manifest;

pub fn run(args: IndexArgs) -> Result<()> {
    let out = require(args.out.clone(), "out")?;
    super::ensure_parent(&out)?;
    match args.retriever.unwrap_or(RetrieverKind::Bm25) {
        RetrieverKind::Bm25 => bm25(args, &out),
        RetrieverKind::Embed => embed(args, &out),
        RetrieverKind::Repo => bail!("the repo retriever needs no index; pass --retriever repo to `pack` directly"),
    }
}

pub(super) fn bm25_params(k1: Option<f64>, b: Option<f64>, query_cap: Option<usize>) -> Bm25Params {
    let d = Bm25Params::default();
    Bm25Params { k1: k1.unwrap_or(d.k1), b: b.unwrap_or(d.b), query_cap: query_cap.unwrap_or(d.query_cap) }
}

fn bm25(args: IndexArgs, out: &std::path::Path) -> Result<()> {
    let corpus_path = input(args.corpus, "corpus")?;
    let corpus = Corpus::load_jsonl(&corpus_path)?;
    if corpus.is_empty() {
        bail!("empty corpus");
    }
    let params = bm25_params(args.bm25_k1, args.bm25_b, args.query_cap);
    let index = Bm25Index::build(&corpus, params)?;
    index.save(out)?;
    info!(
        "indexed {} documents, {} terms, {} postings",
        index.n_docs(),
        index.vocabulary_size(),
        index.total_postings()
    );

    let mut m = Manifest::new("index", out)?;
    m.input("corpus", &corpus_path)
        .set("retriever", "bm25")
        .set("bm25-k1", params.k1)
        .set("bm25-b", params.b)
        .set("query-cap", params.query_cap);
    m.write()?;
    Ok(())
}

fn embed(args: IndexArgs, out: &std::path::Path) -> Result<()> {
    let emb_path = input(args.embeddings, "embeddings")?;
    let raw = EmbeddingIndex::load(&emb_path)?;
    if raw.is_empty() {
        bail!("embeddings file holds no vectors");
    }
    let corpus_path = match args.corpus {
        Some(p) => {
            super::existing(&p)?;
            let corpus = Corpus::load_jsonl(&p)?;
            check_coverage(&raw, &corpus)?;
            Some(p)
        }
        None => None,
    };
    let nlist = match args.nlist {
        Some(n) => n,
        None => {
            let n = DEFAULT_NLIST.min(raw.len());
            if n < DEFAULT_NLIST {
                warn!("only {} vectors; using nlist = {n}", raw.len());
            }
            n
        }
    };
    let train_sample = args.train_sample.unwrap_or(DEFAULT_TRAIN_SAMPLE);
    let seed = args.seed.unwrap_or(0);
    let index = raw.train(nlist, train_sample, seed)?;
    index.save(out)?;
    info!("trained {nlist} cells over {} vectors of dimension {}", index.len(), index.dim());

    let mut m = Manifest::new("index", out)?;
    m.input("embeddings", &emb_path)
        .set("retriever", "embed")
        .set("nlist", nlist)
        .set("train-sample", train_sample)
        .seed(seed);
    if let Some(p) = &corpus_path {
        m.input("corpus", p);
    }
    m.write()?;
    Ok(())
}

fn check_coverage(index: &EmbeddingIndex, corpus: &Corpus) -> Result<()> {
    let ids: HashSet<&str> = index.ids().iter().map(String::as_str).collect();
    if let Some(doc) = corpus.documents().iter().find(|d| !ids.contains(d.id())) {
        bail!("document `{}` has no embedding", doc.id());
    }
    if let Some(id) = index.ids().iter().find(|id| corpus.ordinal(id).is_none()) {
        bail!("embedding `{id}` matches no document");
    }
    Ok(())
}
