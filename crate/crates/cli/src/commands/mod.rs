mod analyze;
mod gen_kv;
mod index;
mod ingest;
mod inspect;
mod mix;
mod pack;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{Analyze, Command};
use crate::config::{FileConfig, Merge};

/// Runs one command after filling unset flags from `file` (an empty
/// default when no config file was given).
pub fn run(command: Command, file: FileConfig) -> Result<()> {
    let FileConfig { seed, dir, ingest, index, pack, mix, analyze, gen_kv, .. } = file;
    fn merged<T: Merge>(mut args: T, table: T, dir: &Path, seed: Option<u64>) -> T {
        args.merge(table, dir, seed);
        args
    }
    match command {
        Command::Ingest(a) => ingest::run(merged(a, ingest, &dir, seed)),
        Command::Index(a) => index::run(merged(a, index, &dir, seed)),
        Command::Pack(a) => pack::run(merged(a, pack, &dir, seed)),
        Command::Mix(a) => mix::run(merged(a, mix, &dir, seed)),
        Command::Analyze { what } => match what {
            Analyze::Burstiness(a) => analyze::burstiness(merged(a, analyze.burstiness, &dir, seed)),
            Analyze::Losses(a) => analyze::losses(merged(a, analyze.losses, &dir, seed)),
            Analyze::Lengths(a) => analyze::lengths(merged(a, analyze.lengths, &dir, seed)),
        },
        Command::GenKv(a) => gen_kv::run(merged(a, gen_kv, &dir, seed)),
        Command::Inspect(a) => inspect::run(&a.path),
    }
}

/// Unwraps a setting that has no default.
fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing required setting --{flag}"),
    }
}

/// An input path that must exist when the command starts.
fn input(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    let path = require(value, flag)?;
    existing(&path)?;
    Ok(path)
}

fn existing(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("missing input: {} does not exist", path.display());
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush().with_context(|| format!("writing {}", path.display()))
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut out = create(path)?;
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush().with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let item =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))?;
        items.push(item);
    }
    Ok(items)
}

/// Writes a report to `out`, or pretty-prints it on stdout.
fn emit_report<T: Serialize>(out: Option<&Path>, report: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, report),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, report)?;
            lock.write_all(b"\n")?;
            Ok(())
        }
    }
}
