//! Run manifests written next to every artifact.
//!
//! A manifest records the producing command, its fully resolved settings and
//! the digests of every input and output. Paths are relative to the
//! manifest's directory, and `argv` re-runs the command from there. Nothing
//! machine-specific (timestamps, thread counts, absolute paths) is recorded,
//! so identical runs yield identical manifests.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digest of a file, or of a directory tree as the hash of its sorted
/// `relative path NUL file digest LF` lines.
pub fn sha256_path(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return sha256_file(path);
    }
    let mut hasher = Sha256::new();
    for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", path.display()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(path).unwrap_or(entry.path());
        hasher.update(rel.to_string_lossy().replace('\\', "/").as_bytes());
        hasher.update(b"\0");
        hasher.update(sha256_file(entry.path())?.as_bytes());
        hasher.update(b"\n");
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    sibling(artifact, "manifest.json")
}

/// `<artifact>.<suffix>` in the artifact's directory.
pub fn sibling(artifact: &Path, suffix: &str) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    artifact.with_file_name(name)
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Record<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    argv: Vec<String>,
    config: &'a Value,
    config_sha256: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

/// Collects what a command read and wrote, then writes
/// `<primary>.manifest.json`.
#[derive(Debug)]
pub struct Manifest {
    command: String,
    base: PathBuf,
    primary: PathBuf,
    config: Map<String, Value>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, primary: &Path) -> Result<Self> {
        let primary = std::path::absolute(primary).with_context(|| format!("resolving {}", primary.display()))?;
        let base = primary.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            command: command.to_string(),
            base,
            outputs: vec![primary.clone()],
            primary,
            config: Map::new(),
            seed: None,
            inputs: Vec::new(),
        })
    }

    /// `path` relative to the manifest's directory.
    pub fn rel(&self, path: &Path) -> String {
        let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
        pathdiff::diff_paths(&abs, &self.base).unwrap_or(abs).to_string_lossy().replace('\\', "/")
    }

    /// Records a setting under its flag name.
    pub fn set(&mut self, flag: &str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).expect("settings serialize");
        self.config.insert(flag.to_string(), value);
        self
    }

    /// Records a path-valued setting and hashes it as an input.
    pub fn input(&mut self, flag: &str, path: &Path) -> &mut Self {
        let rel = self.rel(path);
        self.inputs.push(path.to_path_buf());
        self.set(flag, rel)
    }

    /// An input that is not named by a flag, e.g. a part of a mixture spec.
    pub fn extra_input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    /// Records a path-valued output setting.
    pub fn output(&mut self, flag: &str, path: &Path) -> &mut Self {
        let rel = self.rel(path);
        self.outputs.push(path.to_path_buf());
        self.set(flag, rel)
    }

    /// A side file written next to the primary artifact.
    pub fn side_output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self.set("seed", seed)
    }

    fn argv(&self, config: &Map<String, Value>) -> Vec<String> {
        let mut argv = vec!["splice".to_string()];
        argv.extend(self.command.split(' ').map(str::to_string));
        for (flag, value) in config {
            match value {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => argv.push(format!("--{flag}")),
                Value::Array(items) => {
                    let joined: Vec<String> = items.iter().map(scalar).collect();
                    argv.push(format!("--{flag}"));
                    argv.push(joined.join(","));
                }
                other => {
                    argv.push(format!("--{flag}"));
                    argv.push(scalar(other));
                }
            }
        }
        argv
    }

    pub fn write(mut self) -> Result<PathBuf> {
        self.inputs.sort();
        self.inputs.dedup();
        let digest = |paths: &[PathBuf]| -> Result<Vec<FileDigest>> {
            paths.iter().map(|p| Ok(FileDigest { path: self.rel(p), sha256: sha256_path(p)? })).collect()
        };
        let inputs = digest(&self.inputs)?;
        let outputs = digest(&self.outputs)?;
        let mut config = self.config.clone();
        config.insert("out".into(), Value::String(self.rel(&self.primary)));
        let config_value = Value::Object(config.clone());
        let config_sha256 = hex::encode(Sha256::digest(serde_json::to_vec(&config_value)?));
        let record = Record {
            tool: "splice",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed: self.seed,
            argv: self.argv(&config),
            config: &config_value,
            config_sha256,
            inputs,
            outputs,
        };
        let path = manifest_path(&self.primary);
        let mut out = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(&mut out, &record)?;
        out.write_all(b"\n")?;
        Ok(path)
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
