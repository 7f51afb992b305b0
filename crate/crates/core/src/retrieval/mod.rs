//! Neighbour providers for example construction.
//!
//! Three interchangeable [`Retriever`]s: a BM25 lexical index, an IVF
//! inner-product index over precomputed embeddings, and repository
//! directory order. [`NeighborTable`] freezes any of them (or a hand-written
//! table) into a precomputed lookup.

pub mod bm25;
pub mod ivf;
pub mod repo;
pub mod tokenize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub use bm25::{Bm25Index, Bm25Params};
pub use ivf::{EmbeddingIndex, EmbeddingRetriever};
pub use repo::RepoGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub score: f64,
}

/// `RETRIEVE(d, k)`: up to `k` documents ranked by decreasing score, ties by
/// ascending id, never containing `d` itself. Results may include documents
/// that are already consumed; filtering is the caller's job.
pub trait Retriever: Sync {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>>;
}

impl<R: Retriever + ?Sized> Retriever for &R {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        (**self).retrieve(corpus, ordinal, k)
    }
}

impl<R: Retriever + ?Sized> Retriever for Box<R> {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        (**self).retrieve(corpus, ordinal, k)
    }
}

/// Sorts `(ordinal, score)` pairs by score descending then id ascending and
/// keeps the first `k`.
pub(crate) fn rank_neighbors<'a>(
    mut scored: Vec<(usize, f64)>,
    k: usize,
    id_of: impl Fn(usize) -> &'a str,
) -> Vec<Neighbor> {
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| id_of(a.0).cmp(id_of(b.0))));
    scored.truncate(k);
    scored.into_iter().map(|(d, score)| Neighbor { id: id_of(d).to_string(), score }).collect()
}

/// Fixed neighbour lists keyed by corpus ordinal.
#[derive(Debug, Clone, Default)]
pub struct NeighborTable {
    lists: Vec<Vec<Neighbor>>,
}

impl NeighborTable {
    /// Lists are given by corpus ordinal. Each list must already be ranked,
    /// free of duplicates and must not contain its own document.
    pub fn new(corpus: &Corpus, lists: Vec<Vec<Neighbor>>) -> Result<Self> {
        if lists.len() != corpus.len() {
            return Err(Error::config(format!(
                "neighbour table has {} rows for {} documents",
                lists.len(),
                corpus.len()
            )));
        }
        for (i, list) in lists.iter().enumerate() {
            let own = corpus.get(i).id();
            let mut seen = std::collections::HashSet::new();
            for n in list {
                if corpus.ordinal(&n.id).is_none() {
                    return Err(Error::UnknownDocument(n.id.clone()));
                }
                if n.id == own || !seen.insert(n.id.as_str()) {
                    return Err(Error::config(format!(
                        "neighbour list of `{own}` repeats `{}` or contains itself",
                        n.id
                    )));
                }
            }
        }
        Ok(Self { lists })
    }

    /// Builds a table from id lists, scoring by negated rank.
    pub fn from_ids(corpus: &Corpus, lists: Vec<Vec<String>>) -> Result<Self> {
        let lists = lists
            .into_iter()
            .map(|ids| ids.into_iter().enumerate().map(|(r, id)| Neighbor { id, score: -(r as f64) }).collect())
            .collect();
        Self::new(corpus, lists)
    }

    /// Runs `retriever` for every document up front, in parallel.
    pub fn precompute<R: Retriever + ?Sized>(retriever: &R, corpus: &Corpus, k: usize) -> Result<Self> {
        let lists =
            (0..corpus.len()).into_par_iter().map(|i| retriever.retrieve(corpus, i, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { lists })
    }

    pub fn list(&self, ordinal: usize) -> &[Neighbor] {
        &self.lists[ordinal]
    }
}

impl Retriever for NeighborTable {
    fn retrieve(&self, _corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        let list = &self.lists[ordinal];
        Ok(list[..k.min(list.len())].to_vec())
    }
}

/// A retriever that never finds anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoNeighbors;

impl Retriever for NoNeighbors {
    fn retrieve(&self, _corpus: &Corpus, _ordinal: usize, _k: usize) -> Result<Vec<Neighbor>> {
        Ok(Vec::new())
    }
}
