//! Seeded synthetic corpora and embeddings for tests, benchmarks and the
//! command-line `synth` helpers.

use rand::Rng;

use crate::corpus::{Corpus, Document};
use crate::rng;

/// Corpus with planted topical clusters. Every document belongs to one
/// cluster and mixes words from a shared vocabulary with words from its
/// cluster's private vocabulary, each drawn from a Zipf-like distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredSpec {
    pub clusters: usize,
    pub vocab_per_cluster: usize,
    pub docs: usize,
    pub min_terms: usize,
    pub max_terms: usize,
    pub common_vocab: usize,
    /// Probability that a term comes from the shared vocabulary.
    pub common_fraction: f64,
    /// Exponent of the rank-frequency law used to draw words.
    pub zipf_s: f64,
    pub seed: u64,
}

impl Default for ClusteredSpec {
    fn default() -> Self {
        Self {
            clusters: 50,
            vocab_per_cluster: 2000,
            docs: 5000,
            min_terms: 150,
            max_terms: 450,
            common_vocab: 2000,
            common_fraction: 0.5,
            zipf_s: 1.0,
            seed: 0,
        }
    }
}

/// Cumulative weights of ranks `1..=n` under `rank^-s`.
fn zipf_cdf(n: usize, s: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = (1..=n)
        .map(|r| {
            acc += (r as f64).powf(-s);
            acc
        })
        .collect();
    for c in &mut cdf {
        *c /= acc;
    }
    cdf
}

fn draw(cdf: &[f64], r: &mut rng::SeededRng) -> usize {
    let u: f64 = r.random();
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

/// Documents `doc00000…` with whitespace-separated words, token length set
/// to the word count, and domain `cluster{c}`. Returns the corpus and each
/// document's cluster.
pub fn clustered_corpus(spec: &ClusteredSpec) -> (Corpus, Vec<usize>) {
    assert!(spec.clusters > 0 && spec.vocab_per_cluster > 0 && spec.common_vocab > 0);
    assert!(spec.min_terms > 0 && spec.min_terms <= spec.max_terms);
    let common = zipf_cdf(spec.common_vocab, spec.zipf_s);
    let private = zipf_cdf(spec.vocab_per_cluster, spec.zipf_s);
    let mut r = rng::seeded(spec.seed);
    let width = spec.docs.to_string().len().max(5);
    let mut labels = Vec::with_capacity(spec.docs);
    let docs = (0..spec.docs)
        .map(|i| {
            let c = r.random_range(0..spec.clusters);
            labels.push(c);
            let n = r.random_range(spec.min_terms..=spec.max_terms);
            let mut text = String::with_capacity(n * 8);
            for t in 0..n {
                if t > 0 {
                    text.push(' ');
                }
                if r.random::<f64>() < spec.common_fraction {
                    text.push_str(&format!("g{}", draw(&common, &mut r)));
                } else {
                    text.push_str(&format!("c{c}w{}", draw(&private, &mut r)));
                }
            }
            Document::new(format!("doc{i:0width$}"), text).with_token_len(n).with_domain(format!("cluster{c}"))
        })
        .collect();
    (Corpus::new(docs).expect("generated ids are unique"), labels)
}

/// Small corpus of random lowercase words with repository paths and chunk
/// tags, usable by every packer. Lengths vary from 1 to `max_chars`.
pub fn random_corpus(n_docs: usize, max_chars: usize, seed: u64) -> Corpus {
    assert!(max_chars > 0);
    let mut r = rng::seeded(seed);
    let n_repos = (n_docs / 20).max(1);
    let docs = (0..n_docs)
        .map(|i| {
            let len = r.random_range(1..=max_chars);
            let mut text = String::with_capacity(len);
            while text.len() < len {
                if !text.is_empty() && r.random_range(0..6) == 0 {
                    text.push(' ');
                } else {
                    text.push(char::from(b'a' + r.random_range(0..8u8)));
                }
            }
            let repo = r.random_range(0..n_repos);
            let dir = r.random_range(0..3);
            Document::new(format!("d{i}"), text)
                .with_path(format!("r{repo}/m{dir}/f{i}.c"))
                .with_domain(format!("r{repo}#0"))
        })
        .collect();
    Corpus::new(docs).expect("generated ids are unique")
}

/// `n` vectors of dimension `dim` around `centers` random centres, with ids
/// `v0…`. Components are uniform noise added to the centre.
pub fn clustered_vectors(n: usize, dim: usize, centers: usize, noise: f32, seed: u64) -> (Vec<String>, Vec<f32>) {
    let mut r = rng::seeded(seed);
    let cs: Vec<f32> = (0..centers.max(1) * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut vectors = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = r.random_range(0..centers.max(1));
        for j in 0..dim {
            vectors.push(cs[c * dim + j] + noise * r.random_range(-1.0f32..1.0));
        }
    }
    ((0..n).map(|i| format!("v{i}")).collect(), vectors)
}
