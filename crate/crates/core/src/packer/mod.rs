//! Training-example construction.
//!
//! Four packers share one output type, [`PackedExample`]:
//!
//! * [`splice`]: retrieval-driven breadth-first trees of related documents;
//! * [`baseline_pack`]: random documents concatenated up to the length budget;
//! * [`domrnd_pack`]: random documents from a single domain, bounded in
//!   characters;
//! * [`repo_pack`]: repository files in depth-first directory order.
//!
//! Every packer consumes each corpus document exactly once.

mod baseline;
mod repo;
pub mod splice;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LengthUnit};
use crate::error::{Error, Result};
use crate::rng;

pub use baseline::{baseline_pack, domrnd_pack};
pub use repo::repo_pack;
pub use splice::{splice_pack_all, splice_pack_one, splice_tree, SpliceTree};

pub const DEFAULT_MAX_LEN: usize = 32_768;
pub const DEFAULT_DOMRND_CHAR_BOUND: usize = 120_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Splice,
    Baseline,
    Domrnd,
    Repo,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    #[default]
    Identity,
    Reverse,
    Shuffle,
}

macro_rules! str_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }

        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::config(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

str_enum!(Method { Splice => "splice", Baseline => "baseline", Domrnd => "domrnd", Repo => "repo" });
str_enum!(Order { Identity => "identity", Reverse => "reverse", Shuffle => "shuffle" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingConfig {
    pub method: Method,
    /// Neighbours retrieved per expanded document.
    pub k: usize,
    /// Example length budget, in corpus length units.
    pub max_len: usize,
    pub order: Order,
    pub seed: u64,
    pub domrnd_char_bound: usize,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            method: Method::Splice,
            k: 1,
            max_len: DEFAULT_MAX_LEN,
            order: Order::Identity,
            seed: 0,
            domrnd_char_bound: DEFAULT_DOMRND_CHAR_BOUND,
        }
    }
}

impl PackingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.max_len == 0 {
            return Err(Error::config("max length must be at least 1"));
        }
        if self.domrnd_char_bound == 0 {
            return Err(Error::config("domrnd character bound must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "id")]
    pub doc_id: String,
    /// Start within the document, in length units.
    pub offset: usize,
    pub len: usize,
    /// Whether the segment covers less than the whole document.
    pub truncated: bool,
}

impl Segment {
    fn whole(doc_id: &str, len: usize) -> Self {
        Self { doc_id: doc_id.to_string(), offset: 0, len, truncated: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedExample {
    pub segments: Vec<Segment>,
    pub total_len: usize,
    /// Root of the retrieval tree; only retrieval-built examples have one.
    pub root: Option<String>,
    /// `(parent, child)` edges of the retrieval tree.
    pub edges: Vec<(String, String)>,
    pub method: Method,
    pub order: Order,
    /// Seed that drove this example's ordering.
    pub seed: u64,
}

impl PackedExample {
    fn from_segments(segments: Vec<Segment>, method: Method, seed: u64) -> Self {
        Self {
            total_len: segments.iter().map(|s| s.len).sum(),
            segments,
            root: None,
            edges: Vec::new(),
            method,
            order: Order::Identity,
            seed,
        }
    }

    /// Documents this example consumed from the corpus. For tree-built
    /// examples that is every tree node, including nodes trimmed away; for
    /// the other packers it is every document that starts in this example.
    pub fn consumed_ids(&self) -> Vec<&str> {
        match &self.root {
            Some(root) => std::iter::once(root.as_str()).chain(self.edges.iter().map(|(_, c)| c.as_str())).collect(),
            None => self.segments.iter().filter(|s| s.offset == 0).map(|s| s.doc_id.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PackStats {
    pub examples: usize,
    pub consumed_docs: usize,
    /// Length of consumed documents that no example contains.
    pub discarded_len: usize,
    pub mean_len: f64,
}

impl PackStats {
    pub fn compute(examples: &[PackedExample], corpus: &Corpus) -> Self {
        let mut consumed_docs = 0;
        let mut consumed_len = 0;
        for ex in examples {
            for id in ex.consumed_ids() {
                consumed_docs += 1;
                consumed_len += corpus.ordinal(id).map_or(0, |i| corpus.doc_len(i));
            }
        }
        let emitted: usize = examples.iter().map(|e| e.total_len).sum();
        Self {
            examples: examples.len(),
            consumed_docs,
            discarded_len: consumed_len.saturating_sub(emitted),
            mean_len: if examples.is_empty() { 0.0 } else { emitted as f64 / examples.len() as f64 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct PackOutput {
    pub examples: Vec<PackedExample>,
    pub stats: PackStats,
}

impl PackOutput {
    fn new(examples: Vec<PackedExample>, corpus: &Corpus) -> Self {
        let stats = PackStats::compute(&examples, corpus);
        Self { examples, stats }
    }
}

/// `ORDER`: permutes the flattened tree.
pub fn order_segments<T>(mut items: Vec<T>, order: Order, seed: Option<u64>) -> Result<Vec<T>> {
    match order {
        Order::Identity => {}
        Order::Reverse => items.reverse(),
        Order::Shuffle => {
            let seed = seed.ok_or_else(|| Error::config("shuffle order needs a seed"))?;
            rng::shuffle(&mut items, &mut rng::seeded(seed));
        }
    }
    Ok(items)
}

/// `TRIM`: keeps whole documents while they fit in `max_len`, then a prefix
/// of the next one filling the budget exactly; drops the rest.
pub fn trim<S: AsRef<str>>(ordered: &[(S, usize)], max_len: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut used = 0;
    for (id, len) in ordered {
        let id = id.as_ref();
        if used + len <= max_len {
            out.push(Segment::whole(id, *len));
            used += len;
        } else {
            let room = max_len - used;
            if room > 0 {
                out.push(Segment { doc_id: id.to_string(), offset: 0, len: room, truncated: true });
            }
            break;
        }
    }
    out
}

/// Concatenated text of an example's segments, with no separator between
/// documents. Partial segments can only be cut in character units.
pub fn materialize_text(example: &PackedExample, corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    for seg in &example.segments {
        let doc = corpus.by_id(&seg.doc_id).ok_or_else(|| Error::UnknownDocument(seg.doc_id.clone()))?;
        if !seg.truncated {
            out.push_str(doc.text());
            continue;
        }
        if corpus.length_unit() == LengthUnit::Tokens {
            return Err(Error::config(format!("cannot cut `{}` at a token boundary without a tokenizer", seg.doc_id)));
        }
        out.extend(doc.text().chars().skip(seg.offset).take(seg.len));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn lens(segs: &[Segment]) -> Vec<(usize, bool)> {
        segs.iter().map(|s| (s.len, s.truncated)).collect()
    }

    #[test]
    fn trim_under_budget() {
        let segs = trim(&[("a", 10), ("b", 10), ("c", 10)], 35);
        assert_eq!(lens(&segs), [(10, false), (10, false), (10, false)]);
    }

    #[test]
    fn trim_cuts_the_overflowing_document() {
        let segs = trim(&[("a", 10), ("b", 10), ("c", 10)], 25);
        assert_eq!(lens(&segs), [(10, false), (10, false), (5, true)]);
        assert_eq!(segs[2].doc_id, "c");
        assert_eq!(segs[2].offset, 0);
    }

    #[test]
    fn trim_first_document_larger_than_budget() {
        let segs = trim(&[("a", 100), ("b", 1)], 7);
        assert_eq!(lens(&segs), [(7, true)]);
    }

    #[test]
    fn trim_exact_fit_drops_rest() {
        let segs = trim(&[("a", 5), ("b", 5), ("c", 5)], 10);
        assert_eq!(lens(&segs), [(5, false), (5, false)]);
    }

    #[test]
    fn ordering() {
        let v = vec!['a', 'b', 'c'];
        assert_eq!(order_segments(v.clone(), Order::Identity, None).unwrap(), ['a', 'b', 'c']);
        assert_eq!(order_segments(v.clone(), Order::Reverse, None).unwrap(), ['c', 'b', 'a']);
        assert!(order_segments(v.clone(), Order::Shuffle, None).is_err());
        let s1 = order_segments((0..50).collect::<Vec<_>>(), Order::Shuffle, Some(9)).unwrap();
        let s2 = order_segments((0..50).collect::<Vec<_>>(), Order::Shuffle, Some(9)).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn example_json_shape() {
        let ex = PackedExample {
            segments: vec![Segment::whole("d1", 3)],
            total_len: 3,
            root: Some("d1".into()),
            edges: vec![("d1".into(), "d2".into())],
            method: Method::Splice,
            order: Order::Reverse,
            seed: 5,
        };
        let json = serde_json::to_string(&ex).unwrap();
        assert_eq!(
            json,
            r#"{"segments":[{"id":"d1","offset":0,"len":3,"truncated":false}],"total_len":3,"root":"d1","edges":[["d1","d2"]],"method":"splice","order":"reverse","seed":5}"#
        );
        let back: PackedExample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ex);
    }

    #[test]
    fn materialize_cuts_characters() {
        let corpus = Corpus::new(vec![Document::new("a", "héllo"), Document::new("b", "wörld")]).unwrap();
        let ex = PackedExample::from_segments(
            vec![Segment::whole("a", 5), Segment { doc_id: "b".into(), offset: 0, len: 2, truncated: true }],
            Method::Baseline,
            0,
        );
        assert_eq!(materialize_text(&ex, &corpus).unwrap(), "héllowö");
    }

    #[test]
    fn method_and_order_parse() {
        assert_eq!("domrnd".parse::<Method>().unwrap(), Method::Domrnd);
        assert_eq!("shuffle".parse::<Order>().unwrap(), Order::Shuffle);
        assert!("zigzag".parse::<Order>().is_err());
        assert_eq!(Method::Repo.to_string(), "repo");
    }
}
