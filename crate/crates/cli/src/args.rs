use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use splice_core::{LengthUnit, Method, Order};

#[derive(Debug, Parser)]
#[command(name = "splice", version, about = "Structured packing of long-context training data")]
pub struct Cli {
    /// TOML file with default values; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read raw documents into a corpus file.
    Ingest(IngestArgs),
    /// Build a BM25 or IVF index over a corpus.
    Index(IndexArgs),
    /// Pack a corpus into training examples.
    Pack(PackArgs),
    /// Interleave packed streams by weight.
    Mix(MixArgs),
    /// Corpus and evaluation statistics.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
    /// Generate the key-value retrieval suite.
    GenKv(GenKvArgs),
    /// Summarize any artifact written by this tool.
    Inspect(InspectArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Index(_) => "index",
            Command::Pack(_) => "pack",
            Command::Mix(_) => "mix",
            Command::Analyze { what } => match what {
                Analyze::Burstiness(_) => "analyze burstiness",
                Analyze::Losses(_) => "analyze losses",
                Analyze::Lengths(_) => "analyze lengths",
            },
            Command::GenKv(_) => "gen-kv",
            Command::Inspect(_) => "inspect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrieverKind {
    Bm25,
    Embed,
    Repo,
}

impl RetrieverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RetrieverKind::Bm25 => "bm25",
            RetrieverKind::Embed => "embed",
            RetrieverKind::Repo => "repo",
        }
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct IngestArgs {
    /// JSONL file of records, or a directory of repositories.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop documents longer than this many characters.
    #[arg(long)]
    pub max_chars: Option<usize>,
    /// Byte budget of one repository chunk (directory input only).
    #[arg(long)]
    pub repo_split_bytes: Option<usize>,
    /// Drop exact duplicate texts, keeping the first.
    #[arg(long)]
    pub dedup: bool,
    /// JSONL sidecar of `{"id", "token_len"}` records.
    #[arg(long)]
    pub token_lengths: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub retriever: Option<RetrieverKind>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bm25_k1: Option<f64>,
    #[arg(long)]
    pub bm25_b: Option<f64>,
    /// Leading terms of a document used as its query.
    #[arg(long)]
    pub query_cap: Option<usize>,
    /// Raw embeddings file (embed retriever).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub nlist: Option<usize>,
    /// Vectors sampled for k-means training.
    #[arg(long)]
    pub train_sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PackArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub retriever: Option<RetrieverKind>,
    /// Prebuilt index; BM25 is built on the fly when absent.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(short = 'L', long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub order: Option<Order>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub length_unit: Option<LengthUnit>,
    /// Character bound of a domrnd example.
    #[arg(long)]
    pub char_bound: Option<usize>,
    #[arg(long)]
    pub nprobe: Option<usize>,
    #[arg(long)]
    pub bm25_k1: Option<f64>,
    #[arg(long)]
    pub bm25_b: Option<f64>,
    #[arg(long)]
    pub query_cap: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write example texts as JSONL.
    #[arg(long)]
    pub materialize: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct MixArgs {
    /// JSON mixture file; part paths are relative to its directory.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    /// Zipf coefficients over fixed windows of a packed stream.
    Burstiness(BurstinessArgs),
    /// Mean loss per log2 position bucket.
    Losses(LossesArgs),
    /// Histogram of example or document lengths.
    Lengths(LengthsArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BurstinessArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub packed: Option<PathBuf>,
    #[arg(long)]
    pub length_unit: Option<LengthUnit>,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub max_windows: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct LossesArgs {
    /// JSONL of `{"pos", "loss"}` records.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct LengthsArgs {
    /// Histogram of packed example lengths.
    #[arg(long, conflicts_with = "corpus")]
    pub packed: Option<PathBuf>,
    /// Histogram of document lengths.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub length_unit: Option<LengthUnit>,
    /// Bin edges, comma separated (default: powers of two).
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenKvArgs {
    #[arg(long)]
    pub n_pairs: Option<usize>,
    /// 0-based answer positions, comma separated (default: five evenly spaced).
    #[arg(long, value_delimiter = ',')]
    pub positions: Option<Vec<usize>>,
    #[arg(long)]
    pub per_position: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spaces before each pair after the first and before the query.
    #[arg(long)]
    pub indent: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
}
