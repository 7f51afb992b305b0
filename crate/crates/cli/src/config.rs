//! `--config` TOML files. Top-level `seed` and `threads` apply to every
//! command; each command reads its own table (`[pack]`, `[analyze.losses]`,
//! `[gen-kv]`, ...) whose keys are the command's flag names. Flags given on
//! the command line take precedence, and relative paths in the file resolve
//! against the file's directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::args::{BurstinessArgs, GenKvArgs, IndexArgs, IngestArgs, LengthsArgs, LossesArgs, MixArgs, PackArgs};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub ingest: IngestArgs,
    pub index: IndexArgs,
    pub pack: PackArgs,
    pub mix: MixArgs,
    pub analyze: AnalyzeTables,
    pub gen_kv: GenKvArgs,
    #[serde(skip)]
    pub dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeTables {
    pub burstiness: BurstinessArgs,
    pub losses: LossesArgs,
    pub lengths: LengthsArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }
}

/// Fills unset command-line values from a config table.
pub trait Merge: Sized {
    fn merge(&mut self, file: Self, dir: &Path, seed: Option<u64>);
}

fn rebase(path: Option<PathBuf>, dir: &Path) -> Option<PathBuf> {
    path.map(|p| if p.is_relative() { dir.join(p) } else { p })
}

macro_rules! merge_impl {
    ($ty:ty { values: [$($v:ident),*], paths: [$($p:ident),*], flags: [$($f:ident),*], seed: $has_seed:tt }) => {
        impl Merge for $ty {
            #[allow(unused_variables)]
            fn merge(&mut self, file: Self, dir: &Path, seed: Option<u64>) {
                $( if self.$v.is_none() { self.$v = file.$v; } )*
                $( if self.$p.is_none() { self.$p = rebase(file.$p, dir); } )*
                $( self.$f |= file.$f; )*
                merge_impl!(@seed self, file, seed, $has_seed);
            }
        }
    };
    (@seed $self:ident, $file:ident, $seed:ident, true) => {
        if $self.seed.is_none() {
            $self.seed = $file.seed.or($seed);
        }
    };
    (@seed $self:ident, $file:ident, $seed:ident, false) => {};
}

merge_impl!(IngestArgs {
    values: [max_chars, repo_split_bytes],
    paths: [input, out, token_lengths],
    flags: [dedup],
    seed: false
});
merge_impl!(IndexArgs {
    values: [retriever, bm25_k1, bm25_b, query_cap, nlist, train_sample],
    paths: [corpus, out, embeddings],
    flags: [],
    seed: true
});
merge_impl!(PackArgs {
    values: [method, retriever, k, max_len, order, length_unit, char_bound, nprobe, bm25_k1, bm25_b, query_cap],
    paths: [corpus, index, out, materialize],
    flags: [],
    seed: true
});
merge_impl!(MixArgs { values: [], paths: [spec, out], flags: [], seed: true });
merge_impl!(BurstinessArgs {
    values: [length_unit, window_len, max_windows],
    paths: [corpus, packed, out],
    flags: [],
    seed: true
});
merge_impl!(LossesArgs { values: [], paths: [input, out], flags: [], seed: false });
merge_impl!(LengthsArgs { values: [length_unit, edges], paths: [packed, corpus, out], flags: [], seed: false });
merge_impl!(GenKvArgs { values: [n_pairs, positions, per_position, indent], paths: [out], flags: [], seed: true });
