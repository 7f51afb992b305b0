//! Shared fixtures for the benchmarks.

use splice_core::synthetic::{clustered_corpus, clustered_vectors, ClusteredSpec};
use splice_core::{Bm25Index, Bm25Params, Corpus, EmbeddingIndex};

/// Planted-cluster corpus of `docs` documents.
pub fn corpus(docs: usize) -> Corpus {
    clustered_corpus(&ClusteredSpec { docs, clusters: 20, seed: 1, ..Default::default() }).0
}

pub fn bm25(corpus: &Corpus) -> Bm25Index {
    Bm25Index::build(corpus, Bm25Params::default()).expect("non-empty corpus")
}

/// Trained IVF index with one clustered vector per corpus document.
pub fn embeddings(corpus: &Corpus, dim: usize, nlist: usize) -> EmbeddingIndex {
    let ids: Vec<String> = corpus.documents().iter().map(|d| d.id().to_string()).collect();
    let (_, vectors) = clustered_vectors(ids.len(), dim, 20, 0.4, 2);
    EmbeddingIndex::new(dim, ids, vectors)
        .and_then(|index| index.train(nlist, corpus.len(), 3))
        .expect("valid embeddings")
}
