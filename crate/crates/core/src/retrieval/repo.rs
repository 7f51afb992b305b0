//! Repository structure as a neighbour source: within each repository
//! chunk, files are ordered by a depth-first walk of the directory tree and
//! a file's neighbours are the files that follow it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Neighbor, Retriever};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoChunk {
    pub tag: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RepoGraph {
    chunks: Vec<RepoChunk>,
    position: HashMap<String, (usize, usize)>,
}

/// Sort key placing paths in depth-first order with siblings sorted by name.
fn dfs_key(path: &str) -> Vec<&str> {
    path.split('/').collect()
}

impl RepoGraph {
    /// Groups every document with a path by its chunk tag (`domain`), in
    /// order of first appearance, and orders each chunk depth first.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut chunks: Vec<RepoChunk> = Vec::new();
        let mut chunk_of: HashMap<&str, usize> = HashMap::new();
        let mut paths: Vec<Vec<(&str, &str)>> = Vec::new();
        for doc in corpus.documents() {
            let Some(path) = doc.path() else { continue };
            let tag = doc.domain().unwrap_or("");
            let c = *chunk_of.entry(tag).or_insert_with(|| {
                chunks.push(RepoChunk { tag: tag.to_string(), files: Vec::new() });
                paths.push(Vec::new());
                chunks.len() - 1
            });
            paths[c].push((path, doc.id()));
        }
        for (chunk, mut files) in chunks.iter_mut().zip(paths) {
            files.sort_by(|a, b| dfs_key(a.0).cmp(&dfs_key(b.0)));
            chunk.files = files.into_iter().map(|(_, id)| id.to_string()).collect();
        }
        Self::from_chunks(chunks)
    }

    pub fn from_chunks(chunks: Vec<RepoChunk>) -> Self {
        let position = chunks
            .iter()
            .enumerate()
            .flat_map(|(c, chunk)| chunk.files.iter().enumerate().map(move |(p, id)| (id.clone(), (c, p))))
            .collect();
        Self { chunks, position }
    }

    pub fn chunks(&self) -> &[RepoChunk] {
        &self.chunks
    }

    pub fn position(&self, id: &str) -> Option<(usize, usize)> {
        self.position.get(id).copied()
    }

    /// The next `k` files after `doc` in its chunk, scored by negated
    /// distance.
    pub fn repo_neighbors(&self, doc: &Document, k: usize) -> Result<Vec<Neighbor>> {
        if doc.path().is_none() {
            return Err(Error::MissingPath(doc.id().to_string()));
        }
        let (c, p) = self.position(doc.id()).ok_or_else(|| Error::UnknownDocument(doc.id().to_string()))?;
        Ok(self.chunks[c]
            .files
            .iter()
            .skip(p + 1)
            .take(k)
            .enumerate()
            .map(|(d, id)| Neighbor { id: id.clone(), score: -((d + 1) as f64) })
            .collect())
    }
}

impl Retriever for RepoGraph {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.repo_neighbors(corpus.get(ordinal), k)
    }
}
