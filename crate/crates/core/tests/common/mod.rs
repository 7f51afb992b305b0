//! Reference implementations used as test oracles. They are written for
//! clarity, not speed, and share no code with the library beyond its public
//! data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

/// Lowercase alphanumeric runs.
pub fn terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Exhaustive BM25: scores every document against the query and sorts.
pub struct Bm25Oracle {
    pub k1: f64,
    pub b: f64,
    pub query_cap: usize,
    ids: Vec<String>,
    tfs: Vec<HashMap<String, u32>>,
    lens: Vec<usize>,
    df: HashMap<String, usize>,
    avgdl: f64,
}

impl Bm25Oracle {
    pub fn new(docs: &[(String, String)], k1: f64, b: f64, query_cap: usize) -> Self {
        let mut tfs = Vec::new();
        let mut lens = Vec::new();
        let mut df: HashMap<String, usize> = HashMap::new();
        for (_, text) in docs {
            let ts = terms(text);
            lens.push(ts.len());
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in ts {
                *tf.entry(t).or_default() += 1;
            }
            for t in tf.keys() {
                *df.entry(t.clone()).or_default() += 1;
            }
            tfs.push(tf);
        }
        let avgdl = if docs.is_empty() { 0.0 } else { lens.iter().sum::<usize>() as f64 / docs.len() as f64 };
        Self { k1, b, query_cap, ids: docs.iter().map(|(id, _)| id.clone()).collect(), tfs, lens, df, avgdl }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = *self.df.get(term).unwrap_or(&0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn score(&self, query: &BTreeSet<String>, d: usize) -> f64 {
        let mut s = 0.0;
        for t in query {
            if let Some(&tf) = self.tfs[d].get(t) {
                let tf = tf as f64;
                let norm = self.k1 * (1.0 - self.b + self.b * self.lens[d] as f64 / self.avgdl);
                s += self.idf(t) * (tf * (self.k1 + 1.0)) / (tf + norm);
            }
        }
        s
    }

    pub fn query_terms(&self, text: &str) -> BTreeSet<String> {
        terms(text).into_iter().take(self.query_cap).filter(|t| self.df.contains_key(t)).collect()
    }

    /// Top-k `(id, score)` with positive scores, score descending, id ascending.
    pub fn query(&self, text: &str, k: usize, exclude: Option<usize>) -> Vec<(String, f64)> {
        let q = self.query_terms(text);
        let mut all: Vec<(String, f64)> = (0..self.ids.len())
            .filter(|&d| Some(d) != exclude)
            .map(|d| (self.ids[d].clone(), self.score(&q, d)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}

/// Exhaustive inner-product top-k over row-major vectors; ties by id.
pub fn brute_force_knn(
    ids: &[String],
    vectors: &[f32],
    dim: usize,
    query: &[f32],
    k: usize,
    exclude: Option<usize>,
) -> Vec<String> {
    let n = vectors.len() / dim;
    let mut scored: Vec<(usize, f64)> = (0..n)
        .filter(|&i| Some(i) != exclude)
        .map(|i| {
            let row = &vectors[i * dim..(i + 1) * dim];
            (i, row.iter().zip(query).map(|(a, b)| *a as f64 * *b as f64).sum())
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(ids[a.0].cmp(&ids[b.0])));
    scored.truncate(k);
    scored.into_iter().map(|(i, _)| ids[i].clone()).collect()
}

/// Result of the reference tree construction.
#[derive(Debug, PartialEq, Eq)]
pub struct BfsTree {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// Breadth-first construction straight from the pseudocode: a level at a
/// time, accepting each unused neighbour of each node in rank order, and
/// re-checking the length guard before every expansion.
pub fn bfs_reference(
    neighbors: &[Vec<usize>],
    lens: &[usize],
    used: &mut [bool],
    root: usize,
    k: usize,
    budget: usize,
) -> BfsTree {
    let mut tree = BfsTree { nodes: vec![root], edges: vec![] };
    used[root] = true;
    let mut total = lens[root];
    let mut frontier = VecDeque::new();
    frontier.push_back(root);
    loop {
        if total >= budget {
            break;
        }
        let Some(d) = frontier.pop_front() else { break };
        for &c in neighbors[d].iter().take(k) {
            if used[c] {
                continue;
            }
            used[c] = true;
            tree.nodes.push(c);
            tree.edges.push((d, c));
            total += lens[c];
            frontier.push_back(c);
        }
    }
    tree
}

/// Files under `root` in depth-first order with siblings sorted by name,
/// as `/`-joined paths relative to `root`.
pub fn dfs_walk(root: &std::path::Path) -> Vec<String> {
    fn go(dir: &std::path::Path, prefix: &str, out: &mut Vec<String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap()).collect();
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let name = e.file_name().to_string_lossy().into_owned();
            let rel = if prefix.is_empty() { name } else { format!("{prefix}/{name}") };
            if e.file_type().unwrap().is_dir() {
                go(&e.path(), &rel, out);
            } else {
                out.push(rel);
            }
        }
    }
    let mut out = Vec::new();
    go(root, "", &mut out);
    out
}

/// Groups `(key, value)` pairs and averages each group.
pub fn group_means<K: Ord + Copy>(pairs: &[(K, f64)]) -> BTreeMap<K, (usize, f64)> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for &(k, v) in pairs {
        groups.entry(k).or_default().push(v);
    }
    groups.into_iter().map(|(k, vs)| (k, (vs.len(), vs.iter().sum::<f64>() / vs.len() as f64))).collect()
}

/// Closed-form simple regression slope of y on x.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Zipf coefficient by the closed-form slope on sorted counts.
pub fn zipf_oracle(counts: &[u64]) -> f64 {
    let mut c = counts.to_vec();
    c.sort_unstable_by(|a, b| b.cmp(a));
    let xs: Vec<f64> = (1..=c.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = c.iter().map(|&f| (f as f64).ln()).collect();
    -ols_slope(&xs, &ys)
}

/// Exact-duplicate removal keeping first occurrences.
pub fn dedup_oracle(texts: &[String]) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..texts.len()).filter(|&i| seen.insert(texts[i].clone())).collect()
}

/// Counts occurrences of `sep` tokens.
pub fn count_tokens(stream: &[u32], sep: u32) -> usize {
    stream.iter().filter(|&&t| t == sep).count()
}
