use std::collections::BTreeMap;

use super::{Method, PackOutput, PackedExample, Segment};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// Random documents concatenated into examples of at most `max_len`.
///
/// A document that does not fit is cut to fill the example exactly and its
/// tail is discarded.
pub fn baseline_pack(corpus: &mut Corpus, max_len: usize, seed: u64) -> Result<PackOutput> {
    if max_len == 0 {
        return Err(Error::config("max length must be at least 1"));
    }
    let mut examples = Vec::new();
    let mut current: Vec<Segment> = Vec::new();
    let mut used = 0;
    for d in rng::permutation(corpus.len(), seed) {
        corpus.consume(d);
        let len = corpus.doc_len(d);
        let id = corpus.get(d).id();
        if used + len <= max_len {
            current.push(Segment::whole(id, len));
            used += len;
        } else {
            current.push(Segment { doc_id: id.to_string(), offset: 0, len: max_len - used, truncated: true });
            used = max_len;
        }
        if used == max_len {
            examples.push(PackedExample::from_segments(std::mem::take(&mut current), Method::Baseline, seed));
            used = 0;
        }
    }
    if !current.is_empty() {
        examples.push(PackedExample::from_segments(current, Method::Baseline, seed));
    }
    Ok(PackOutput::new(examples, corpus))
}

/// Random documents from one domain at a time, concatenated whole into
/// examples of at most `char_bound` characters. A document longer than the
/// bound on its own becomes a single-document example.
pub fn domrnd_pack(corpus: &mut Corpus, seed: u64, char_bound: usize) -> Result<PackOutput> {
    if char_bound == 0 {
        return Err(Error::config("domrnd character bound must be at least 1"));
    }
    let mut by_domain: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, doc) in corpus.documents().iter().enumerate() {
        let domain = doc.domain().ok_or_else(|| Error::MissingDomain(doc.id().to_string()))?;
        by_domain.entry(domain).or_default().push(i);
    }
    let by_domain: Vec<Vec<usize>> = by_domain.into_values().collect();

    let mut examples = Vec::new();
    for (stream, mut members) in by_domain.into_iter().enumerate() {
        rng::shuffle(&mut members, &mut rng::seeded(rng::derive_seed(seed, stream as u64)));
        let mut current: Vec<Segment> = Vec::new();
        let mut chars = 0;
        for d in members {
            corpus.consume(d);
            let doc_chars = corpus.get(d).char_len();
            if !current.is_empty() && chars + doc_chars > char_bound {
                examples.push(PackedExample::from_segments(std::mem::take(&mut current), Method::Domrnd, seed));
                chars = 0;
            }
            current.push(Segment::whole(corpus.get(d).id(), corpus.doc_len(d)));
            chars += doc_chars;
        }
        if !current.is_empty() {
            examples.push(PackedExample::from_segments(current, Method::Domrnd, seed));
        }
    }
    Ok(PackOutput::new(examples, corpus))
}
