use super::{Method, PackOutput, PackedExample, Segment};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::retrieval::RepoGraph;

/// Concatenates each repository chunk's files in depth-first order and cuts
/// the stream into examples of `max_len`. A file crossing an example
/// boundary continues in the next example of the same chunk; nothing is
/// discarded.
pub fn repo_pack(corpus: &mut Corpus, graph: &RepoGraph, max_len: usize) -> Result<PackOutput> {
    if max_len == 0 {
        return Err(Error::config("max length must be at least 1"));
    }
    for doc in corpus.documents() {
        if doc.path().is_none() {
            return Err(Error::MissingPath(doc.id().to_string()));
        }
        if graph.position(doc.id()).is_none() {
            return Err(Error::UnknownDocument(doc.id().to_string()));
        }
    }

    let mut examples = Vec::new();
    for chunk in graph.chunks() {
        let mut current: Vec<Segment> = Vec::new();
        let mut used = 0;
        for id in &chunk.files {
            let d = corpus.ordinal(id).ok_or_else(|| Error::UnknownDocument(id.clone()))?;
            corpus.consume(d);
            let len = corpus.doc_len(d);
            let mut offset = 0;
            loop {
                let take = (len - offset).min(max_len - used);
                current.push(Segment { doc_id: id.clone(), offset, len: take, truncated: take < len });
                offset += take;
                used += take;
                if used == max_len {
                    examples.push(PackedExample::from_segments(std::mem::take(&mut current), Method::Repo, 0));
                    used = 0;
                }
                if offset == len {
                    break;
                }
            }
        }
        if !current.is_empty() {
            examples.push(PackedExample::from_segments(current, Method::Repo, 0));
        }
    }
    Ok(PackOutput::new(examples, corpus))
}
