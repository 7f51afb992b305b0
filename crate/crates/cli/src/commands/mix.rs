use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::json;
use splice_core::mixer::mix;
use splice_core::{MixtureSpec, PackedExample, Separator};

use super::{existing, input, read_jsonl, require, write_json, write_jsonl};
use crate::args::MixArgs;
use crate::manifest::{sibling, Manifest};

pub fn run(args: MixArgs) -> Result<()> {
    let spec_path = input(args.spec, "spec")?;
    let out = require(args.out, "out")?;
    let text = std::fs::read_to_string(&spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: MixtureSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing mixture spec {}", spec_path.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    let base = spec_path.parent().unwrap_or(Path::new(""));
    let mut m = Manifest::new("mix", &out)?;
    m.input("spec", &spec_path).seed(spec.seed);
    let mut streams = Vec::with_capacity(spec.parts.len());
    for part in &spec.parts {
        let Some(rel) = &part.path else {
            bail!("mixture part `{}` has no path", part.name);
        };
        let path = base.join(rel);
        existing(&path)?;
        let examples: Vec<PackedExample> = read_jsonl(&path)?;
        m.extra_input(&path);
        streams.push((part.name.clone(), examples));
    }

    let mixed = mix(&spec, streams)?;
    super::ensure_parent(&out)?;
    write_jsonl(&out, &mixed.examples)?;

    // Every example is framed by one BOS and one EOS token.
    let framed = match spec.separator {
        Separator::BosEos => mixed.examples.len(),
        Separator::None => 0,
    };
    let report_path = sibling(&out, "report.json");
    write_json(
        &report_path,
        &json!({
            "examples": mixed.examples.len(),
            "total_len": mixed.examples.iter().map(|e| e.total_len).sum::<usize>(),
            "separator": spec.separator,
            "bos_tokens": framed,
            "eos_tokens": framed,
            "shares": mixed.shares,
        }),
    )?;
    info!("mixed {} examples from {} streams", mixed.examples.len(), spec.parts.len());
    m.side_output(&report_path);
    m.write()?;
    Ok(())
}
