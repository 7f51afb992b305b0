//! Document store: JSONL and repository-tree ingestion, exact deduplication
//! and length accounting.
//!
//! A [`Corpus`] is immutable after ingestion except for its consumption mask,
//! which the packers flip as documents are placed into examples.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Default per-file character limit applied at ingestion.
pub const DEFAULT_MAX_CHARS: usize = 30_000;
/// Default byte budget of one repository chunk (25 MiB).
pub const DEFAULT_REPO_SPLIT_BYTES: usize = 25 * (1 << 20);

/// Repository tag given to files that sit directly under the ingestion root.
pub const ROOT_REPO: &str = ".";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    text: String,
    char_len: usize,
    token_len: Option<usize>,
    path: Option<String>,
    domain: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self { id: id.into(), char_len: text.chars().count(), text, token_len: None, path: None, domain: None }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    pub fn with_token_len(mut self, token_len: usize) -> Self {
        self.token_len = Some(token_len);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Number of Unicode scalar values in the text.
    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn token_len(&self) -> Option<usize> {
        self.token_len
    }

    pub fn path(&self) -> Option<&str> {
        self.path.as_deref()
    }

    pub fn domain(&self) -> Option<&str> {
        self.domain.as_deref()
    }

    fn check_token_len(&self) -> Result<()> {
        if self.token_len == Some(0) && !self.text.is_empty() {
            return Err(Error::ZeroTokenLength(self.id.clone()));
        }
        Ok(())
    }
}

/// Unit in which document and example lengths are measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Chars,
    Tokens,
}

impl std::fmt::Display for LengthUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LengthUnit::Chars => "chars",
            LengthUnit::Tokens => "tokens",
        })
    }
}

impl std::str::FromStr for LengthUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chars" => Ok(LengthUnit::Chars),
            "tokens" => Ok(LengthUnit::Tokens),
            other => Err(Error::config(format!("unknown length unit `{other}`"))),
        }
    }
}

/// Counters for records that ingestion dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub dropped_too_long: usize,
    pub dropped_duplicate: usize,
    pub unreadable: usize,
}

/// Wire form of a corpus record, shared by raw inputs and saved corpora.
#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_len: Option<usize>,
}

impl From<DocumentRecord> for Document {
    fn from(r: DocumentRecord) -> Self {
        let mut doc = Document::new(r.id, r.text);
        doc.path = r.path;
        doc.domain = r.domain;
        doc.token_len = r.token_len;
        doc
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    consumed: Vec<bool>,
    unit: LengthUnit,
}

impl Corpus {
    /// Builds a corpus in `chars` mode; fails on a repeated id.
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            doc.check_token_len()?;
            if by_id.insert(doc.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Self { consumed: vec![false; docs.len()], docs, by_id, unit: LengthUnit::Chars })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, ordinal: usize) -> &Document {
        &self.docs[ordinal]
    }

    pub fn ordinal(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Document> {
        self.ordinal(id).map(|i| &self.docs[i])
    }

    pub fn length_unit(&self) -> LengthUnit {
        self.unit
    }

    /// Switches the unit lengths are reported in. Token mode needs a token
    /// length on every document.
    pub fn set_length_unit(&mut self, unit: LengthUnit) -> Result<()> {
        if unit == LengthUnit::Tokens {
            if let Some(doc) = self.docs.iter().find(|d| d.token_len.is_none()) {
                return Err(Error::MissingTokenLength(doc.id.clone()));
            }
        }
        self.unit = unit;
        Ok(())
    }

    /// Length of a document in the corpus' current unit.
    pub fn doc_len(&self, ordinal: usize) -> usize {
        let doc = &self.docs[ordinal];
        match self.unit {
            LengthUnit::Chars => doc.char_len,
            LengthUnit::Tokens => doc.token_len.unwrap_or(0),
        }
    }

    pub fn total_len(&self) -> usize {
        (0..self.len()).map(|i| self.doc_len(i)).sum()
    }

    pub fn is_consumed(&self, ordinal: usize) -> bool {
        self.consumed[ordinal]
    }

    /// Marks a document as used. Returns `false` if it already was.
    pub fn consume(&mut self, ordinal: usize) -> bool {
        !std::mem::replace(&mut self.consumed[ordinal], true)
    }

    pub fn consumed_count(&self) -> usize {
        self.consumed.iter().filter(|&&c| c).count()
    }

    pub fn reset_consumption(&mut self) {
        self.consumed.iter_mut().for_each(|c| *c = false);
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.docs
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_jsonl_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_jsonl_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for doc in &self.docs {
            let record = DocumentRecord {
                id: doc.id.clone(),
                text: doc.text.clone(),
                path: doc.path.clone(),
                domain: doc.domain.clone(),
                token_len: doc.token_len,
            };
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Loads a corpus previously written by [`Corpus::write_jsonl`], without
    /// any length filtering.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        ingest_jsonl(path, usize::MAX).map(|(corpus, _)| corpus)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file).lines().collect::<std::io::Result<Vec<_>>>().map_err(|e| Error::io(path, e))
}

fn parse_jsonl<T>(path: &Path) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de> + Send,
{
    let lines = read_lines(path)?;
    lines
        .par_iter()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|source| Error::Json { path: path.to_path_buf(), line: i + 1, source })
        })
        .collect()
}

/// Reads a JSONL corpus, dropping records longer than `max_chars`.
///
/// Blank lines are ignored. Record order is file order.
pub fn ingest_jsonl(path: &Path, max_chars: usize) -> Result<(Corpus, SkipReport)> {
    let records: Vec<DocumentRecord> = parse_jsonl(path)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut skips = SkipReport::default();
    let mut docs = Vec::with_capacity(records.len());
    for record in records {
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let doc = Document::from(record);
        if doc.char_len > max_chars {
            skips.dropped_too_long += 1;
            continue;
        }
        docs.push(doc);
    }
    Ok((Corpus::new(docs)?, skips))
}

/// Root-relative path with `/` separators.
fn relative_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Name of the top-level repository a root-relative id belongs to.
pub fn repo_of(id: &str) -> &str {
    match id.split_once('/') {
        Some((repo, _)) => repo,
        None => ROOT_REPO,
    }
}

/// Walks a directory of repositories, one document per regular file.
///
/// Files are visited depth first with siblings in byte-lexicographic name
/// order. Each top-level directory is one repository; files directly under
/// `root` form the [`ROOT_REPO`] repository. A repository whose retained
/// files exceed `repo_split_bytes` in total is cut into consecutive chunks of
/// whole files; every document's `domain` holds its `<repo>#<chunk>` tag.
pub fn ingest_repo_tree(root: &Path, max_chars: usize, repo_split_bytes: usize) -> Result<(Corpus, SkipReport)> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(root, std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory")));
    }
    if repo_split_bytes == 0 {
        return Err(Error::config("repo_split_bytes must be positive"));
    }

    let mut skips = SkipReport::default();
    let mut files = Vec::new();
    for entry in WalkDir::new(root).min_depth(1).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
            Ok(_) => {}
            Err(err) => {
                log::warn!("skipping unreadable entry: {err}");
                skips.unreadable += 1;
            }
        }
    }

    let contents: Vec<Option<String>> = files
        .par_iter()
        .map(|path| match std::fs::read(path) {
            Ok(bytes) => String::from_utf8(bytes).ok(),
            Err(_) => None,
        })
        .collect();

    let mut docs = Vec::with_capacity(files.len());
    for (path, text) in files.iter().zip(contents) {
        let Some(text) = text else {
            log::warn!("skipping unreadable or non-UTF-8 file {}", path.display());
            skips.unreadable += 1;
            continue;
        };
        let id = relative_id(root, path);
        let doc = Document::new(id.clone(), text).with_path(id);
        if doc.char_len > max_chars {
            skips.dropped_too_long += 1;
            continue;
        }
        docs.push(doc);
    }

    assign_repo_chunks(&mut docs, repo_split_bytes);
    Ok((Corpus::new(docs)?, skips))
}

/// Greedy whole-file chunking per repository, in document order.
fn assign_repo_chunks(docs: &mut [Document], repo_split_bytes: usize) {
    // repo -> (current chunk, bytes in current chunk)
    let mut state: HashMap<String, (usize, usize)> = HashMap::new();
    for doc in docs.iter_mut() {
        let repo = repo_of(&doc.id).to_string();
        let bytes = doc.text.len();
        let (chunk, used) = state.entry(repo.clone()).or_insert((0, 0));
        if *used > 0 && *used + bytes > repo_split_bytes {
            *chunk += 1;
            *used = 0;
        }
        *used += bytes;
        doc.domain = Some(format!("{repo}#{chunk}"));
    }
}

/// Removes documents whose text byte-equals an earlier document's text.
/// Returns the filtered corpus and the number removed.
pub fn dedup_exact(corpus: Corpus) -> Result<(Corpus, usize)> {
    let unit = corpus.unit;
    let docs = corpus.into_documents();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut kept: Vec<Document> = Vec::with_capacity(docs.len());
    let mut removed = 0;
    for doc in docs {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        doc.text.hash(&mut hasher);
        let bucket = buckets.entry(hasher.finish()).or_default();
        if bucket.iter().any(|&k| kept[k].text == doc.text) {
            removed += 1;
            continue;
        }
        bucket.push(kept.len());
        kept.push(doc);
    }
    let mut out = Corpus::new(kept)?;
    out.set_length_unit(unit)?;
    Ok((out, removed))
}

#[derive(Debug, Deserialize)]
struct TokenRecord {
    id: String,
    token_len: usize,
}

/// Sets `token_len` from a `{"id", "token_len"}` JSONL sidecar.
///
/// Returns the corpus and the number of sidecar ids with no matching
/// document. The length unit is left unchanged.
pub fn attach_token_lengths(corpus: Corpus, sidecar: &Path) -> Result<(Corpus, usize)> {
    let records: Vec<TokenRecord> = parse_jsonl(sidecar)?;
    let mut corpus = corpus;
    let mut unmatched = 0;
    for record in records {
        match corpus.by_id.get(&record.id) {
            Some(&i) => {
                let doc = &mut corpus.docs[i];
                doc.token_len = Some(record.token_len);
                doc.check_token_len()?;
            }
            None => {
                log::warn!("token sidecar names unknown document `{}`", record.id);
                unmatched += 1;
            }
        }
    }
    Ok((corpus, unmatched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(path: &Path, body: &str) {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(path, body).unwrap();
    }

    fn ids(c: &Corpus) -> Vec<&str> {
        c.documents().iter().map(|d| d.id()).collect()
    }

    #[test]
    fn jsonl_keeps_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.jsonl");
        write(&p, "{\"id\":\"b\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"yy\"}\n{\"id\":\"c\",\"text\":\"\"}\n");
        let (c, skips) = ingest_jsonl(&p, 10).unwrap();
        assert_eq!(ids(&c), ["b", "a", "c"]);
        assert_eq!(skips, SkipReport::default());
        assert_eq!(c.get(1).char_len(), 2);
        assert!((0..3).all(|i| !c.is_consumed(i)));
    }

    #[test]
    fn jsonl_drops_records_over_limit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.jsonl");
        let long = "é".repeat(30_001);
        let ok = "é".repeat(30_000);
        write(&p, &format!("{{\"id\":\"long\",\"text\":\"{long}\"}}\n{{\"id\":\"ok\",\"text\":\"{ok}\"}}\n"));
        let (c, skips) = ingest_jsonl(&p, DEFAULT_MAX_CHARS).unwrap();
        assert_eq!(ids(&c), ["ok"]);
        assert_eq!(skips.dropped_too_long, 1);
    }

    #[test]
    fn jsonl_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.jsonl");
        write(&p, "");
        let (c, skips) = ingest_jsonl(&p, 10).unwrap();
        assert!(c.is_empty());
        assert_eq!(skips, SkipReport::default());
    }

    #[test]
    fn jsonl_errors_name_line_and_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        write(&p, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\n");
        let err = ingest_jsonl(&p, 10).unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");

        write(&p, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        let err = ingest_jsonl(&p, 10).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn repo_tree_flat() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("b.c"), "int b;");
        write(&dir.path().join("a.c"), "int a;");
        let (c, _) = ingest_repo_tree(dir.path(), 100, 1000).unwrap();
        assert_eq!(ids(&c), ["a.c", "b.c"]);
        assert_eq!(c.get(0).path(), Some("a.c"));
        assert_eq!(c.get(0).domain(), Some(".#0"));
    }

    #[test]
    fn repo_tree_visits_directories_before_dotted_siblings() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("r/a.c"), "1");
        write(&dir.path().join("r/a/z.c"), "2");
        write(&dir.path().join("r/b.c"), "3");
        let (c, _) = ingest_repo_tree(dir.path(), 100, 1000).unwrap();
        assert_eq!(ids(&c), ["r/a/z.c", "r/a.c", "r/b.c"]);
    }

    #[test]
    fn repo_tree_splits_large_repo() {
        let dir = tempfile::tempdir().unwrap();
        // 26 files of 1 "MB" against a 25 "MB" budget, scaled down by 2^10.
        let unit = 1 << 10;
        for i in 0..26 {
            write(&dir.path().join(format!("big/f{i:02}.txt")), &"x".repeat(unit));
        }
        write(&dir.path().join("small/only.txt"), "tiny");
        let (c, _) = ingest_repo_tree(dir.path(), usize::MAX, 25 * unit).unwrap();
        let mut chunk_bytes: HashMap<&str, usize> = HashMap::new();
        for d in c.documents() {
            *chunk_bytes.entry(d.domain().unwrap()).or_default() += d.text().len();
        }
        assert_eq!(chunk_bytes.len(), 3);
        assert_eq!(chunk_bytes["big#0"], 25 * unit);
        assert_eq!(chunk_bytes["big#1"], unit);
        assert_eq!(chunk_bytes["small#0"], 4);
    }

    #[test]
    fn repo_tree_filters_long_files_before_chunking() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("r/a.txt"), "aaaa");
        write(&dir.path().join("r/b.txt"), &"b".repeat(50));
        write(&dir.path().join("r/c.txt"), "cccc");
        let (c, skips) = ingest_repo_tree(dir.path(), 10, 8).unwrap();
        assert_eq!(ids(&c), ["r/a.txt", "r/c.txt"]);
        assert_eq!(skips.dropped_too_long, 1);
        assert!(c.documents().iter().all(|d| d.domain() == Some("r#0")));
    }

    #[test]
    fn repo_tree_counts_non_utf8_as_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bin.dat"), [0xff, 0xfe, 0x00]).unwrap();
        write(&dir.path().join("ok.txt"), "fine");
        let (c, skips) = ingest_repo_tree(dir.path(), 100, 100).unwrap();
        assert_eq!(ids(&c), ["ok.txt"]);
        assert_eq!(skips.unreadable, 1);
    }

    #[test]
    fn repo_tree_missing_root() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_repo_tree(&dir.path().join("nope"), 10, 10).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let c =
            Corpus::new(vec![Document::new("d1", "x"), Document::new("d2", "x"), Document::new("d3", "y")]).unwrap();
        let (c, removed) = dedup_exact(c).unwrap();
        assert_eq!(ids(&c), ["d1", "d3"]);
        assert_eq!(removed, 1);

        let (c2, removed) = dedup_exact(c.clone()).unwrap();
        assert_eq!(removed, 0);
        assert_eq!(ids(&c2), ids(&c));
    }

    #[test]
    fn token_mode_requires_every_length() {
        let dir = tempfile::tempdir().unwrap();
        let side = dir.path().join("tok.jsonl");
        write(&side, "{\"id\":\"a\",\"token_len\":3}\n{\"id\":\"zz\",\"token_len\":1}\n");
        let c = Corpus::new(vec![Document::new("a", "x y z"), Document::new("b", "w")]).unwrap();
        let (mut c, unmatched) = attach_token_lengths(c, &side).unwrap();
        assert_eq!(unmatched, 1);
        assert_eq!(c.get(0).token_len(), Some(3));
        let err = c.set_length_unit(LengthUnit::Tokens).unwrap_err();
        assert!(matches!(&err, Error::MissingTokenLength(id) if id == "b"));

        write(&side, "{\"id\":\"a\",\"token_len\":3}\n{\"id\":\"b\",\"token_len\":1}\n");
        let (mut c, _) = attach_token_lengths(c, &side).unwrap();
        c.set_length_unit(LengthUnit::Tokens).unwrap();
        assert_eq!(c.doc_len(0), 3);
        assert_eq!(c.total_len(), 4);
    }

    #[test]
    fn zero_token_len_rejected_for_nonempty_text() {
        let dir = tempfile::tempdir().unwrap();
        let side = dir.path().join("tok.jsonl");
        write(&side, "{\"id\":\"a\",\"token_len\":0}\n");
        let c = Corpus::new(vec![Document::new("a", "x")]).unwrap();
        assert!(matches!(attach_token_lengths(c, &side), Err(Error::ZeroTokenLength(_))));
    }

    #[test]
    fn consumption_mask() {
        let mut c = Corpus::new(vec![Document::new("a", "x"), Document::new("b", "y")]).unwrap();
        assert!(c.consume(1));
        assert!(!c.consume(1));
        assert_eq!(c.consumed_count(), 1);
        c.reset_consumption();
        assert_eq!(c.consumed_count(), 0);
    }
}
