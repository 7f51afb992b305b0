//! IVF-Flat inner-product index over precomputed embeddings.
//!
//! Coarse centroids come from k-means with inner-product assignment on a
//! seeded sample of the vectors. A query scans the inverted lists of the
//! `nprobe` centroids scoring highest against the query vector; with
//! `nprobe == nlist` this is exhaustive search.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{rank_neighbors, Neighbor, Retriever};
use crate::binio::{self, Reader};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng;

const EMB_MAGIC: &[u8; 8] = b"SPLCEMB1";
const IVF_MAGIC: &[u8; 8] = b"SPLCIVF1";

pub const DEFAULT_NLIST: usize = 8192;
pub const DEFAULT_TRAIN_SAMPLE: usize = 262_144;
pub const KMEANS_ITERATIONS: usize = 25;

/// Inner product accumulated in `f64`.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Index of the highest-scoring centroid; ties go to the lowest ordinal.
fn argmax_centroid(v: &[f32], centroids: &[f32], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::NEG_INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let s = dot(v, centroid);
        if s > best.1 {
            best = (c as u32, s);
        }
    }
    best
}

fn row_key(row: &[f32]) -> Vec<u32> {
    // +0.0 and -0.0 are the same vector.
    row.iter().map(|&x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
}

#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    dim: usize,
    vectors: Vec<f32>,
    ids: Vec<String>,
    row_of: HashMap<String, usize>,
    nlist: usize,
    train_sample: usize,
    centroids: Vec<f32>,
    assignment: Vec<u32>,
    lists: Vec<Vec<u32>>,
}

impl EmbeddingIndex {
    /// An untrained index. `vectors` is row-major, `ids.len()` rows.
    pub fn new(dim: usize, ids: Vec<String>, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::format("dimension must be positive"));
        }
        if vectors.len() != ids.len() * dim {
            return Err(Error::format(format!("{} floats for {} rows of dimension {dim}", vectors.len(), ids.len())));
        }
        if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "embedding row", index: pos / dim });
        }
        let mut row_of = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if row_of.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            dim,
            vectors,
            ids,
            row_of,
            nlist: 0,
            train_sample: 0,
            centroids: Vec::new(),
            assignment: Vec::new(),
            lists: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.row_of.get(id).copied()
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn nlist(&self) -> usize {
        self.nlist
    }

    pub fn train_sample(&self) -> usize {
        self.train_sample
    }

    pub fn is_trained(&self) -> bool {
        self.nlist > 0
    }

    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn inverted_list(&self, c: usize) -> &[u32] {
        &self.lists[c]
    }

    /// Fits `nlist` centroids by k-means on `min(train_sample, len)` vectors
    /// drawn uniformly with `seed`, then assigns every vector.
    pub fn train(mut self, nlist: usize, train_sample: usize, seed: u64) -> Result<Self> {
        if nlist == 0 || train_sample == 0 {
            return Err(Error::config("nlist and train_sample must be positive"));
        }
        let dim = self.dim;
        let n = self.len();
        let mut rng = rng::seeded(seed);

        let mut sample: Vec<usize> = (0..n).collect();
        if train_sample < n {
            // Partial Fisher–Yates: the first `train_sample` slots are a
            // uniform sample without replacement.
            for i in 0..train_sample {
                let j = rand::Rng::random_range(&mut rng, i..n);
                sample.swap(i, j);
            }
            sample.truncate(train_sample);
            sample.sort_unstable();
        }
        let train: Vec<&[f32]> = sample.iter().map(|&i| self.row(i)).collect();

        let distinct = train.iter().map(|r| row_key(r)).collect::<HashSet<_>>().len();
        if nlist > distinct {
            return Err(Error::config(format!("nlist {nlist} exceeds the {distinct} distinct training vectors")));
        }

        // Seed centroids with distinct vectors in random order.
        let mut order: Vec<usize> = (0..train.len()).collect();
        rng::shuffle(&mut order, &mut rng);
        let mut centroids = Vec::with_capacity(nlist * dim);
        let mut used = HashSet::new();
        for &i in &order {
            if used.len() == nlist {
                break;
            }
            if used.insert(row_key(train[i])) {
                centroids.extend_from_slice(train[i]);
            }
        }

        let mut assign: Vec<(u32, f64)> = Vec::new();
        for _ in 0..KMEANS_ITERATIONS {
            let next: Vec<(u32, f64)> = train.par_iter().map(|v| argmax_centroid(v, &centroids, dim)).collect();
            let stable = next.iter().map(|a| a.0).eq(assign.iter().map(|a| a.0));
            assign = next;
            if stable {
                break;
            }
            centroids = update_centroids(&train, &assign, nlist, dim);
        }

        self.nlist = nlist;
        self.train_sample = train_sample;
        self.centroids = centroids;
        self.assign_all();
        Ok(self)
    }

    fn assign_all(&mut self) {
        let dim = self.dim;
        let centroids = &self.centroids;
        self.assignment = self.vectors.par_chunks_exact(dim).map(|v| argmax_centroid(v, centroids, dim).0).collect();
        let mut lists = vec![Vec::new(); self.nlist];
        for (row, &c) in self.assignment.iter().enumerate() {
            lists[c as usize].push(row as u32);
        }
        self.lists = lists;
    }

    /// Top-`k` rows by inner product with `query`, scanning the `nprobe`
    /// best inverted lists. `exclude` is a row never returned.
    pub fn search(&self, query: &[f32], k: usize, nprobe: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
        if !self.is_trained() {
            return Err(Error::config("embedding index is not trained"));
        }
        if nprobe == 0 || nprobe > self.nlist {
            return Err(Error::config(format!("nprobe must lie in 1..={}, got {nprobe}", self.nlist)));
        }
        if query.len() != self.dim {
            return Err(Error::config(format!("query has dimension {}, index has {}", query.len(), self.dim)));
        }
        let mut cells: Vec<(usize, f64)> =
            self.centroids.chunks_exact(self.dim).map(|c| dot(query, c)).enumerate().collect();
        cells.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut scored = Vec::new();
        for &(c, _) in &cells[..nprobe] {
            for &row in &self.lists[c] {
                let row = row as usize;
                if Some(row) != exclude {
                    scored.push((row, dot(query, self.row(row))));
                }
            }
        }
        Ok(rank_neighbors(scored, k, |r| self.ids[r].as_str()))
    }

    /// Neighbours of the stored vector `query_id`, excluding itself.
    pub fn ann_query(&self, query_id: &str, k: usize, nprobe: usize) -> Result<Vec<Neighbor>> {
        let row = self.row_of(query_id).ok_or_else(|| Error::UnknownDocument(query_id.to_string()))?;
        self.search(self.row(row), k, nprobe, Some(row))
    }

    /// Loads an `SPLCEMB1` embedding file or an `SPLCIVF1` trained index.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&binio::read_file(path)?)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.starts_with(IVF_MAGIC) {
            return Self::trained_from_bytes(buf);
        }
        let mut r = Reader::new(buf);
        r.magic(EMB_MAGIC)?;
        let (dim, ids, vectors) = read_rows(&mut r)?;
        r.finish()?;
        Self::new(dim, ids, vectors)
    }

    fn trained_from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(IVF_MAGIC)?;
        let nlist = r.u32()? as usize;
        let train_sample = usize::try_from(r.u64()?).unwrap_or(usize::MAX);
        let (dim, ids, vectors) = read_rows(&mut r)?;
        let n = ids.len();
        let mut index = Self::new(dim, ids, vectors)?;
        if nlist == 0 {
            return Err(Error::format("trained index with nlist 0"));
        }
        r.expect_at_least((nlist * dim) as u64, 4)?;
        let centroids = (0..nlist * dim).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        if let Some(pos) = centroids.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "centroid", index: pos / dim });
        }
        r.expect_at_least(n as u64, 4)?;
        let assignment = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        if assignment.iter().any(|&c| c as usize >= nlist) {
            return Err(Error::format("assignment out of range"));
        }
        index.nlist = nlist;
        index.train_sample = train_sample;
        index.centroids = centroids;
        index.assign_all();
        if index.assignment != assignment {
            return Err(Error::format("stored assignment disagrees with centroids"));
        }
        Ok(index)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        if self.is_trained() {
            w.write_all(IVF_MAGIC)?;
            binio::put_u32(w, self.nlist as u32)?;
            binio::put_u64(w, self.train_sample as u64)?;
            write_rows(w, self.dim, &self.ids, &self.vectors)?;
            for &x in &self.centroids {
                binio::put_f32(w, x)?;
            }
            for &c in &self.assignment {
                binio::put_u32(w, c)?;
            }
            Ok(())
        } else {
            write_embeddings_to(w, self.dim, &self.ids, &self.vectors)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

/// Recomputes centroids as cluster means; empty clusters take the training
/// points that fit their current centroid worst.
fn update_centroids(train: &[&[f32]], assign: &[(u32, f64)], nlist: usize, dim: usize) -> Vec<f32> {
    let mut sums = vec![0.0f64; nlist * dim];
    let mut counts = vec![0usize; nlist];
    for (v, &(c, _)) in train.iter().zip(assign) {
        let c = c as usize;
        counts[c] += 1;
        for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(v.iter()) {
            *s += x as f64;
        }
    }
    let mut centroids: Vec<f32> = sums
        .chunks_exact(dim)
        .zip(&counts)
        .flat_map(|(s, &n)| s.iter().map(move |&x| if n == 0 { 0.0 } else { (x / n as f64) as f32 }))
        .collect();

    let empty: Vec<usize> = (0..nlist).filter(|&c| counts[c] == 0).collect();
    if !empty.is_empty() {
        let mut worst: Vec<usize> = (0..train.len()).collect();
        worst.sort_by(|&a, &b| assign[a].1.total_cmp(&assign[b].1).then(a.cmp(&b)));
        for (c, &p) in empty.iter().zip(&worst) {
            centroids[c * dim..(c + 1) * dim].copy_from_slice(train[p]);
        }
    }
    centroids
}

fn read_rows(r: &mut Reader<'_>) -> Result<(usize, Vec<String>, Vec<f32>)> {
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    if dim == 0 {
        return Err(Error::format("dimension must be positive"));
    }
    let floats = count.checked_mul(dim as u64).ok_or_else(|| Error::format("row count overflows"))?;
    r.expect_at_least(floats, 4)?;
    let vectors = (0..floats).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    r.expect_at_least(count, 4)?;
    let ids = (0..count).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    Ok((dim, ids, vectors))
}

fn write_rows<W: Write>(w: &mut W, dim: usize, ids: &[String], vectors: &[f32]) -> std::io::Result<()> {
    binio::put_u32(w, dim as u32)?;
    binio::put_u64(w, ids.len() as u64)?;
    for &x in vectors {
        binio::put_f32(w, x)?;
    }
    for id in ids {
        binio::put_str(w, id)?;
    }
    Ok(())
}

/// Writes the `SPLCEMB1` embedding format.
pub fn write_embeddings_to<W: Write>(w: &mut W, dim: usize, ids: &[String], vectors: &[f32]) -> std::io::Result<()> {
    w.write_all(EMB_MAGIC)?;
    write_rows(w, dim, ids, vectors)
}

pub fn write_embeddings(path: &Path, dim: usize, ids: &[String], vectors: &[f32]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_embeddings_to(&mut w, dim, ids, vectors).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// An [`EmbeddingIndex`] bound to a corpus whose documents it covers
/// one-to-one.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingRetriever<'a> {
    index: &'a EmbeddingIndex,
    nprobe: usize,
}

impl<'a> EmbeddingRetriever<'a> {
    pub fn new(index: &'a EmbeddingIndex, corpus: &Corpus, nprobe: usize) -> Result<Self> {
        if !index.is_trained() {
            return Err(Error::config("embedding index is not trained"));
        }
        if nprobe == 0 || nprobe > index.nlist() {
            return Err(Error::config(format!("nprobe must lie in 1..={}, got {nprobe}", index.nlist())));
        }
        if let Some(id) = index.ids().iter().find(|id| corpus.ordinal(id).is_none()) {
            return Err(Error::UnknownDocument(id.clone()));
        }
        if let Some(doc) = corpus.documents().iter().find(|d| index.row_of(d.id()).is_none()) {
            return Err(Error::config(format!("document `{}` has no embedding", doc.id())));
        }
        Ok(Self { index, nprobe })
    }
}

impl Retriever for EmbeddingRetriever<'_> {
    fn retrieve(&self, corpus: &Corpus, ordinal: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.index.ann_query(corpus.get(ordinal).id(), k, self.nprobe)
    }
}
