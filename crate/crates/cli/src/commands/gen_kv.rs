use anyhow::{bail, Result};
use log::info;
use splice_core::syntheval::{gen_kv_suite_with, write_kv_suite, KvLayout};

use super::require;
use crate::args::GenKvArgs;
use crate::manifest::Manifest;

const DEFAULT_N_PAIRS: usize = 75;
const DEFAULT_PER_POSITION: usize = 100;

/// First, last and three evenly spaced interior positions.
fn default_positions(n_pairs: usize) -> Vec<usize> {
    let last = n_pairs - 1;
    let mut p: Vec<usize> = (0..5).map(|i| i * last / 4).collect();
    p.dedup();
    p
}

pub fn run(args: GenKvArgs) -> Result<()> {
    let out = require(args.out, "out")?;
    let n_pairs = args.n_pairs.unwrap_or(DEFAULT_N_PAIRS);
    if n_pairs == 0 {
        bail!("--n-pairs must be at least 1");
    }
    let positions = args.positions.unwrap_or_else(|| default_positions(n_pairs));
    let per_position = args.per_position.unwrap_or(DEFAULT_PER_POSITION);
    let seed = args.seed.unwrap_or(0);
    let indent = args.indent.unwrap_or(1);
    let layout = KvLayout { pair_indent: " ".repeat(indent), query_indent: " ".repeat(indent) };

    let records = gen_kv_suite_with(n_pairs, &positions, per_position, seed, &layout)?;
    let mut w = super::create(&out)?;
    write_kv_suite(&records, &mut w)?;
    std::io::Write::flush(&mut w)?;
    drop(w);
    info!("wrote {} prompts with {n_pairs} pairs each", records.len());

    let mut m = Manifest::new("gen-kv", &out)?;
    m.set("n-pairs", n_pairs)
        .set("positions", &positions)
        .set("per-position", per_position)
        .set("indent", indent)
        .seed(seed);
    m.write()?;
    Ok(())
}
