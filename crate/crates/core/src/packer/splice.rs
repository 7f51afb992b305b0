//! Retrieval-driven example construction.
//!
//! Starting from a root document, documents are expanded breadth first:
//! each popped document's `RETRIEVE(d, k)` results that are still unused are
//! appended, queued and consumed. Expansion stops when the queue empties or
//! the accumulated length reaches the budget; the flattened tree is then
//! ordered and trimmed to the budget.

use std::collections::VecDeque;

use super::{order_segments, trim, Method, PackOutput, PackedExample, PackingConfig};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::retrieval::Retriever;
use crate::rng;

/// The flattened retrieval tree, before ordering and trimming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpliceTree {
    /// Corpus ordinals in the order they were appended (root first).
    pub nodes: Vec<usize>,
    /// `(parent, child)` ordinals.
    pub edges: Vec<(usize, usize)>,
    pub len: usize,
}

/// Grows one tree from `root`, consuming every appended document.
pub fn splice_tree<R: Retriever + ?Sized>(
    corpus: &mut Corpus,
    retriever: &R,
    k: usize,
    max_len: usize,
    root: usize,
) -> Result<SpliceTree> {
    if !corpus.consume(root) {
        return Err(Error::RootConsumed(corpus.get(root).id().to_string()));
    }
    let mut tree = SpliceTree { nodes: vec![root], edges: Vec::new(), len: corpus.doc_len(root) };
    let mut queue = VecDeque::from([root]);
    while tree.len < max_len {
        let Some(d) = queue.pop_front() else { break };
        for n in retriever.retrieve(corpus, d, k)? {
            let child = corpus.ordinal(&n.id).ok_or_else(|| Error::UnknownDocument(n.id.clone()))?;
            if corpus.consume(child) {
                tree.nodes.push(child);
                tree.edges.push((d, child));
                tree.len += corpus.doc_len(child);
                queue.push_back(child);
            }
        }
    }
    Ok(tree)
}

fn build_example<R: Retriever + ?Sized>(
    corpus: &mut Corpus,
    retriever: &R,
    config: &PackingConfig,
    root: usize,
    order_seed: u64,
) -> Result<PackedExample> {
    let tree = splice_tree(corpus, retriever, config.k, config.max_len, root)?;
    let ordered = order_segments(tree.nodes, config.order, Some(order_seed))?;
    let ordered: Vec<(&str, usize)> = ordered.iter().map(|&i| (corpus.get(i).id(), corpus.doc_len(i))).collect();
    let segments = trim(&ordered, config.max_len);
    let id = |i: usize| corpus.get(i).id().to_string();
    Ok(PackedExample {
        total_len: segments.iter().map(|s| s.len).sum(),
        segments,
        root: Some(id(root)),
        edges: tree.edges.iter().map(|&(p, c)| (id(p), id(c))).collect(),
        method: Method::Splice,
        order: config.order,
        seed: order_seed,
    })
}

fn check_splice(config: &PackingConfig) -> Result<()> {
    config.validate()?;
    if config.method != Method::Splice {
        return Err(Error::config(format!("splice packer called with method `{}`", config.method)));
    }
    Ok(())
}

/// Builds a single example rooted at the document `root`.
pub fn splice_pack_one<R: Retriever + ?Sized>(
    corpus: &mut Corpus,
    retriever: &R,
    config: &PackingConfig,
    root: &str,
) -> Result<PackedExample> {
    check_splice(config)?;
    let root = corpus.ordinal(root).ok_or_else(|| Error::UnknownDocument(root.to_string()))?;
    build_example(corpus, retriever, config, root, config.seed)
}

/// Packs the whole corpus. Roots follow a seeded permutation of the
/// documents, skipping consumed ones; example `i` is ordered with seed
/// `derive_seed(config.seed, i)`.
pub fn splice_pack_all<R: Retriever + ?Sized>(
    corpus: &mut Corpus,
    retriever: &R,
    config: &PackingConfig,
) -> Result<PackOutput> {
    check_splice(config)?;
    let roots = rng::permutation(corpus.len(), config.seed);
    let mut examples = Vec::new();
    for root in roots {
        if corpus.is_consumed(root) {
            continue;
        }
        let order_seed = rng::derive_seed(config.seed, examples.len() as u64);
        examples.push(build_example(corpus, retriever, config, root, order_seed)?);
    }
    Ok(PackOutput::new(examples, corpus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::packer::Order;
    use crate::retrieval::{NeighborTable, NoNeighbors};

    fn corpus(n: usize, len: usize) -> Corpus {
        Corpus::new((1..=n).map(|i| Document::new(format!("d{i}"), "x".repeat(len))).collect()).unwrap()
    }

    fn table(c: &Corpus, rows: &[&[usize]]) -> NeighborTable {
        NeighborTable::from_ids(c, rows.iter().map(|r| r.iter().map(|&i| format!("d{i}")).collect()).collect()).unwrap()
    }

    fn config(k: usize, max_len: usize) -> PackingConfig {
        PackingConfig { k, max_len, ..Default::default() }
    }

    fn seg_ids(ex: &PackedExample) -> Vec<&str> {
        ex.segments.iter().map(|s| s.doc_id.as_str()).collect()
    }

    #[test]
    fn lone_document() {
        let mut c = corpus(1, 10);
        let ex = splice_pack_one(&mut c, &NoNeighbors, &config(1, 100), "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d1"]);
        assert_eq!(ex.total_len, 10);
        assert!(ex.edges.is_empty());
        assert!(matches!(splice_pack_one(&mut c, &NoNeighbors, &config(1, 100), "d1"), Err(Error::RootConsumed(_))));
    }

    #[test]
    fn path_for_k1() {
        let mut c = corpus(3, 10);
        let t = table(&c, &[&[2], &[3], &[]]);
        let ex = splice_pack_one(&mut c, &t, &config(1, 100), "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d1", "d2", "d3"]);
        assert_eq!(ex.edges, [("d1".to_string(), "d2".to_string()), ("d2".to_string(), "d3".to_string())]);
    }

    #[test]
    fn consumed_neighbours_end_the_path() {
        let mut c = corpus(3, 10);
        let t = table(&c, &[&[2], &[1], &[1]]);
        let ex = splice_pack_one(&mut c, &t, &config(1, 100), "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d1", "d2"]);
    }

    #[test]
    fn binary_tree_level_order() {
        // 1 -> (2, 3); 2 -> (4, 5); 3 -> (6, 7)
        let mut c = corpus(7, 1);
        let t = table(&c, &[&[2, 3], &[4, 5], &[6, 7], &[], &[], &[], &[]]);
        let ex = splice_pack_one(&mut c, &t, &config(2, 100), "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d1", "d2", "d3", "d4", "d5", "d6", "d7"]);
    }

    #[test]
    fn stops_expanding_once_budget_reached() {
        // Lengths 10 each, budget 20: root (10) < 20 so expand root -> d2, d3
        // appended in one round (30), then stop; TRIM keeps 20.
        let mut c = corpus(5, 10);
        let t = table(&c, &[&[2, 3], &[4], &[5], &[], &[]]);
        let ex = splice_pack_one(&mut c, &t, &config(2, 20), "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d1", "d2"]);
        assert_eq!(ex.edges.len(), 2);
        assert!(c.is_consumed(2), "trimmed d3 stays consumed");
        assert!(!c.is_consumed(3));
    }

    #[test]
    fn reverse_then_trim() {
        let mut c = corpus(3, 10);
        let t = table(&c, &[&[2], &[3], &[]]);
        let cfg = PackingConfig { order: Order::Reverse, ..config(1, 25) };
        let ex = splice_pack_one(&mut c, &t, &cfg, "d1").unwrap();
        assert_eq!(seg_ids(&ex), ["d3", "d2", "d1"]);
        assert_eq!(ex.segments[2].len, 5);
        assert!(ex.segments[2].truncated);
    }

    #[test]
    fn pack_all_without_neighbours_is_one_doc_per_example() {
        let mut c = corpus(25, 3);
        let out = splice_pack_all(&mut c, &NoNeighbors, &config(1, 100)).unwrap();
        assert_eq!(out.examples.len(), 25);
        assert_eq!(out.stats.consumed_docs, 25);
        assert_eq!(out.stats.discarded_len, 0);
    }

    #[test]
    fn pack_all_rejects_other_methods() {
        let mut c = corpus(2, 3);
        let cfg = PackingConfig { method: Method::Baseline, ..Default::default() };
        assert!(splice_pack_all(&mut c, &NoNeighbors, &cfg).is_err());
    }
}
