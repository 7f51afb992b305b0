//! Retrieval-driven packing of long-context training examples.
//!
//! Documents are grouped into fixed-budget examples by growing a
//! breadth-first tree of retrieval neighbours from a sampled root, so that
//! each example holds related text. Baseline, same-domain and
//! repository-order packers, a weighted stream mixer, burstiness statistics
//! and a key-value retrieval prompt generator sit alongside.

mod binio;
pub mod error;
pub mod rng;

pub mod analysis;
pub mod corpus;
pub mod mixer;
pub mod packer;
pub mod retrieval;
pub mod synthetic;
pub mod syntheval;

pub use corpus::{Corpus, Document, LengthUnit, SkipReport};
pub use error::{Error, Result};
pub use mixer::{MixtureSpec, Separator};
pub use packer::{Method, Order, PackOutput, PackStats, PackedExample, PackingConfig, Segment};
pub use retrieval::{Bm25Index, Bm25Params, EmbeddingIndex, Neighbor, NeighborTable, RepoGraph, Retriever};
