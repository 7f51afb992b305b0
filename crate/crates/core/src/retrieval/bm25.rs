//! Okapi BM25 inverted index.
//!
//! ```text
//! score(D, Q) = Σ_{t ∈ Q} IDF(t) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|D|/avgdl))
//! IDF(t)      = ln((N − df + 0.5) / (df + 0.5) + 1)
//! ```
//!
//! Q is the set of distinct terms among the first `query_cap` terms of the
//! query text. Per-document sums run over query terms in lexicographic order,
//! so a score is a pure function of (query, document) and never depends on
//! which pruning path produced it.
//!
//! Queries are exact top-k. Terms are visited in decreasing order of their
//! best possible contribution; once the contributions still unvisited cannot
//! lift an unseen document past the current k-th partial score, candidates
//! are scored exactly through the forward index in decreasing order of their
//! upper bounds, stopping once no bound can reach the k-th exact score.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::tokenize::for_each_term;
use super::{rank_neighbors, Neighbor, Retriever};
use crate::binio::{self, Reader};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SPLCBM25";

/// Relative slack on pruning bounds, covering summation-order rounding.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    /// Maximum number of leading terms of a document used as its query.
    pub query_cap: usize,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75, query_cap: 1024 }
    }
}

impl Bm25Params {
    fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(Error::config(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::config(format!("b must lie in [0, 1], got {}", self.b)));
        }
        if self.query_cap == 0 {
            return Err(Error::config("query_cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    ids: Vec<String>,
    ordinal_of: HashMap<String, u32>,
    /// Terms sorted lexicographically; a term's id is its position here.
    terms: Vec<String>,
    term_id: HashMap<String, u32>,
    postings: Vec<Vec<Posting>>,
    doc_len: Vec<u32>,
    avg_doc_len: f64,
    // Derived from the above.
    forward: Vec<Vec<(u32, u32)>>,
    idf: Vec<f64>,
    max_contrib: Vec<f64>,
}

/// Distinct terms of one document with their counts, sorted by term.
fn term_counts(text: &str) -> (Vec<(String, u32)>, u32) {
    let mut terms = Vec::new();
    for_each_term(text, |t| terms.push(t.to_string()));
    let len = terms.len() as u32;
    terms.sort_unstable();
    let mut counts: Vec<(String, u32)> = Vec::new();
    for t in terms {
        match counts.last_mut() {
            Some((last, c)) if *last == t => *c += 1,
            _ => counts.push((t, 1)),
        }
    }
    (counts, len)
}

impl Bm25Index {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Result<Self> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n = corpus.len();
        if u32::try_from(n).is_err() {
            return Err(Error::config("corpus too large for a u32 document ordinal"));
        }

        // Intern terms batch by batch so per-document term strings never all
        // live at once.
        let mut provisional: HashMap<String, u32> = HashMap::new();
        let mut forward: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n);
        let mut doc_len = Vec::with_capacity(n);
        for batch in corpus.documents().chunks(4096) {
            let counted: Vec<_> = batch.par_iter().map(|d| term_counts(d.text())).collect();
            for (counts, len) in counted {
                doc_len.push(len);
                let row = counts
                    .into_iter()
                    .map(|(t, c)| {
                        let next = provisional.len() as u32;
                        (*provisional.entry(t).or_insert(next), c)
                    })
                    .collect();
                forward.push(row);
            }
        }

        let mut terms: Vec<(String, u32)> = provisional.into_iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut remap = vec![0u32; terms.len()];
        for (new, (_, old)) in terms.iter().enumerate() {
            remap[*old as usize] = new as u32;
        }
        forward.par_iter_mut().for_each(|row| {
            row.iter_mut().for_each(|(t, _)| *t = remap[*t as usize]);
            row.sort_unstable_by_key(|&(t, _)| t);
        });
        let terms: Vec<String> = terms.into_iter().map(|(t, _)| t).collect();

        let mut postings: Vec<Vec<Posting>> = vec![Vec::new(); terms.len()];
        for (d, row) in forward.iter().enumerate() {
            for &(t, tf) in row {
                postings[t as usize].push(Posting { doc: d as u32, tf });
            }
        }

        let ids: Vec<String> = corpus.documents().iter().map(|d| d.id().to_string()).collect();
        Ok(Self::assemble(params, ids, terms, postings, doc_len, Some(forward)))
    }

    fn assemble(
        params: Bm25Params,
        ids: Vec<String>,
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
        doc_len: Vec<u32>,
        forward: Option<Vec<Vec<(u32, u32)>>>,
    ) -> Self {
        let n = ids.len();
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_doc_len = if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let forward = forward.unwrap_or_else(|| {
            let mut fwd = vec![Vec::new(); n];
            for (t, list) in postings.iter().enumerate() {
                for p in list {
                    fwd[p.doc as usize].push((t as u32, p.tf));
                }
            }
            fwd
        });
        let ordinal_of = ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
        let term_id = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut index = Self {
            params,
            ids,
            ordinal_of,
            terms,
            term_id,
            postings,
            doc_len,
            avg_doc_len,
            forward,
            idf: Vec::new(),
            max_contrib: Vec::new(),
        };
        let n = n as f64;
        index.idf = index
            .postings
            .iter()
            .map(|list| {
                let df = list.len() as f64;
                ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
            })
            .collect();
        index.max_contrib = (0..index.postings.len())
            .map(|t| index.postings[t].iter().map(|p| index.contribution(t, p.doc as usize, p.tf)).fold(0.0, f64::max))
            .collect();
        index
    }

    #[inline]
    fn contribution(&self, term: usize, doc: usize, tf: u32) -> f64 {
        let Bm25Params { k1, b, .. } = self.params;
        let tf = tf as f64;
        let dl = self.doc_len[doc] as f64;
        let avgdl = self.avg_doc_len;
        self.idf[term] * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl))
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn n_docs(&self) -> usize {
        self.ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc_len(&self, ordinal: usize) -> usize {
        self.doc_len[ordinal] as usize
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.ids[ordinal]
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.term_id.get(term).map(|&t| self.postings[t as usize].as_slice())
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_id.get(term).map(|&t| self.idf[t as usize])
    }

    pub fn total_postings(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }

    /// Distinct known term ids among the first `query_cap` terms, ascending.
    fn query_terms(&self, text: &str) -> Vec<u32> {
        let cap = self.params.query_cap;
        let mut taken = 0usize;
        let mut ids = Vec::new();
        for_each_term(text, |t| {
            if taken >= cap {
                return;
            }
            taken += 1;
            if let Some(&id) = self.term_id.get(t) {
                ids.push(id);
            }
        });
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Score of one document over the flagged query terms.
    fn row_score(&self, in_query: &[bool], doc: usize) -> f64 {
        let mut score = 0.0;
        for &(t, tf) in &self.forward[doc] {
            if in_query[t as usize] {
                score += self.contribution(t as usize, doc, tf);
            }
        }
        score
    }

    /// Top-`k` documents for a free-text query. `exclude` is an ordinal that
    /// must never be returned. Zero-score documents are never returned.
    pub fn query_text(&self, text: &str, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let query = self.query_terms(text);
        if query.is_empty() || k == 0 {
            return Vec::new();
        }
        let scored = SCRATCH.with(|cell| {
            let mut scratch = cell.borrow_mut();
            self.search(&query, k, exclude.map(|e| e as u32), &mut scratch)
        });
        rank_neighbors(scored, k, |d| self.ids[d].as_str())
    }

    /// Neighbours of a document by its own text, excluding itself.
    pub fn query_doc(&self, doc: &Document, k: usize) -> Result<Vec<Neighbor>> {
        let ordinal = self.ordinal_of.get(doc.id()).ok_or_else(|| Error::UnknownDocument(doc.id().to_string()))?;
        Ok(self.query_text(doc.text(), k, Some(*ordinal as usize)))
    }

    fn search(&self, query: &[u32], k: usize, exclude: Option<u32>, s: &mut Scratch) -> Vec<(usize, f64)> {
        let n = self.ids.len();
        if s.acc.len() < n {
            s.acc.resize(n, 0.0);
        }
        s.touched.clear();

        let mut order = std::mem::take(&mut s.order);
        order.clear();
        order.extend_from_slice(query);
        order.sort_by(|&a, &b| self.max_contrib[b as usize].total_cmp(&self.max_contrib[a as usize]).then(a.cmp(&b)));
        // rest[i] bounds what terms i.. can still add to any document.
        let mut rest = std::mem::take(&mut s.rest);
        rest.clear();
        rest.resize(order.len() + 1, 0.0);
        for i in (0..order.len()).rev() {
            rest[i] = rest[i + 1] + self.max_contrib[order[i] as usize];
        }

        // The k largest accumulators seen so far. Accumulators only grow, so
        // this stays exact and its minimum is the pruning threshold.
        let mut top = TopK::new(k);
        let mut stop = order.len();
        for (i, &t) in order.iter().enumerate() {
            if top.threshold() > rest[i] * (1.0 + BOUND_SLACK) {
                stop = i;
                break;
            }
            for p in &self.postings[t as usize] {
                if Some(p.doc) == exclude {
                    continue;
                }
                let d = p.doc as usize;
                if s.acc[d] == 0.0 {
                    s.touched.push(p.doc);
                }
                s.acc[d] += self.contribution(t as usize, d, p.tf);
                top.offer(p.doc, s.acc[d]);
            }
        }
        // Score the documents with the best partial sums first; their totals
        // give a threshold that discards most other candidates before any
        // sorting. Final scores sum over forward rows, in term order.
        if s.in_query.len() < self.terms.len() {
            s.in_query.resize(self.terms.len(), false);
        }
        for &t in query {
            s.in_query[t as usize] = true;
        }
        let tail = rest[stop];
        let mut done = TopK::new(k);
        let mut finished = Vec::new();
        let leaders: Vec<u32> = top.entries.iter().map(|e| e.0).collect();
        for &d in &leaders {
            let d = d as usize;
            let score = self.row_score(&s.in_query, d);
            done.offer(d as u32, score);
            finished.push((d, score));
        }

        let mut candidates = Vec::new();
        for &d in &s.touched {
            let d = d as usize;
            let partial = s.acc[d];
            s.acc[d] = 0.0;
            if (partial + tail) * (1.0 + BOUND_SLACK) >= done.threshold() && !leaders.contains(&(d as u32)) {
                candidates.push((d, partial));
            }
        }
        // The rest in decreasing bound order, until no remaining bound can
        // reach the k-th finished score.
        candidates.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (d, partial) in candidates {
            if (partial + tail) * (1.0 + BOUND_SLACK) < done.threshold() {
                break;
            }
            let score = self.row_score(&s.in_query, d);
            done.offer(d as u32, score);
            finished.push((d, score));
        }
        for &t in query {
            s.in_query[t as usize] = false;
        }
        s.order = order;
        s.rest = rest;
        finished.retain(|c| c.1 > 0.0);
        finished
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        binio::put_f64(w, self.params.k1)?;
        binio::put_f64(w, self.params.b)?;
        binio::put_u64(w, self.params.query_cap as u64)?;
        binio::put_u64(w, self.ids.len() as u64)?;
        for id in &self.ids {
            binio::put_str(w, id)?;
        }
        for &l in &self.doc_len {
            binio::put_u32(w, l)?;
        }
        binio::put_u64(w, self.terms.len() as u64)?;
        for (term, list) in self.terms.iter().zip(&self.postings) {
            binio::put_str(w, term)?;
            binio::put_u32(w, list.len() as u32)?;
            for p in list {
                binio::put_u32(w, p.doc)?;
                binio::put_u32(w, p.tf)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&binio::read_file(path)?)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(MAGIC)?;
        let params =
            Bm25Params { k1: r.f64()?, b: r.f64()?, query_cap: usize::try_from(r.u64()?).unwrap_or(usize::MAX) };
        params.validate()?;
        let n = r.u64()?;
        r.expect_at_least(n, 8)?;
        let ids = (0..n).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let doc_len = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n_terms = r.u64()?;
        r.expect_at_least(n_terms, 8)?;
        let mut terms = Vec::with_capacity(n_terms as usize);
        let mut postings = Vec::with_capacity(n_terms as usize);
        for _ in 0..n_terms {
            let term = r.string()?;
            if terms.last().is_some_and(|prev: &String| *prev >= term) {
                return Err(Error::format("terms are not strictly sorted"));
            }
            let count = r.u32()? as u64;
            r.expect_at_least(count, 8)?;
            let mut list = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let p = Posting { doc: r.u32()?, tf: r.u32()? };
                if p.doc as u64 >= n || p.tf == 0 {
                    return Err(Error::format(format!("bad posting for term `{term}`")));
                }
                if list.last().is_some_and(|q: &Posting| q.doc >= p.doc) {
                    return Err(Error::format(format!("postings of `{term}` not sorted")));
                }
                list.push(p);
            }
            terms.push(term);
            postings.push(list);
        }
        r.finish()?;
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::DuplicateId(dup.clone()));
        }
        Ok(Self::assemble(params, ids, terms, postings, doc_len, None))
    }

    /// Checks that the index was built over exactly this corpus.
    pub fn check_matches(&self, corpus: &Corpus) -> Result<()> {
        if self.ids.len() != corpus.len() || self.ids.iter().zip(corpus.documents()).any(|(a, d)| a != d.id()) {
            return Err(Error::config("BM25 index does not match the corpus"));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Scratch {
    acc: Vec<f64>,
    touched: Vec<u32>,
    order: Vec<u32>,
    rest: Vec<f64>,
    /// Flags for the current query's terms, indexed by term id.
    in_query: Vec<bool>,
}

/// The `k` largest values offered per document, where a document's value
/// never decreases between offers.
struct TopK {
    k: usize,
    entries: Vec<(u32, f64)>,
    min: f64,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, entries: Vec::with_capacity(k), min: f64::NEG_INFINITY }
    }

    fn threshold(&self) -> f64 {
        if self.entries.len() == self.k {
            self.min
        } else {
            f64::NEG_INFINITY
        }
    }

    fn offer(&mut self, doc: u32, value: f64) {
        if self.entries.len() == self.k && value <= self.min {
            return;
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == doc) {
            e.1 = value;
        } else if self.entries.len() < self.k {
            self.entries.push((doc, value));
        } else {
            let at = self.entries.iter().position(|e| e.1 == self.min).expect("min is present");
            self.entries[at] = (doc, value);
        }
        if self.entries.len() == self.k {
            self.min = self.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

impl Retriever for Bm25Index {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.query_doc(corpus.get(ordinal), k)
    }
}
