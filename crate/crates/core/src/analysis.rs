//! Corpus and stream statistics: Zipf coefficients of context windows,
//! position-bucketed losses and length histograms.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LengthUnit};
use crate::error::{Error, Result};
use crate::packer::PackedExample;
use crate::retrieval::tokenize::{for_each_term, tokenize};
use crate::rng;

/// Number of position buckets; the last one ends at 2^15 = 32768.
pub const N_LOSS_BUCKETS: usize = 15;
pub const MAX_LOSS_POSITION: u64 = 1 << N_LOSS_BUCKETS;

/// Negated OLS slope of ln(frequency) on ln(rank) over all distinct tokens.
pub fn zipf_coefficient<T: Hash + Eq>(tokens: &[T]) -> Result<f64> {
    let mut counts: HashMap<&T, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut freqs: Vec<u64> = counts.into_values().collect();
    zipf_from_counts(&mut freqs)
}

/// Same as [`zipf_coefficient`] from raw per-token counts.
pub fn zipf_from_counts(freqs: &mut [u64]) -> Result<f64> {
    if freqs.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 distinct tokens for a Zipf fit, got {}", freqs.len())));
    }
    freqs.sort_unstable_by(|a, b| b.cmp(a));
    let n = freqs.len() as f64;
    let xs: Vec<f64> = (1..=freqs.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = freqs.iter().map(|&f| (f as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    // Frequencies are sorted descending, so the slope is never positive;
    // the clamp only absorbs rounding on flat distributions.
    Ok((-sxy / sxx).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfReport {
    pub window_len: usize,
    pub n_windows: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub coefficients: Vec<f64>,
    /// Full windows available in the stream.
    pub total_windows: usize,
    /// Windows skipped because they held fewer than 2 distinct tokens.
    pub degenerate_windows: usize,
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Cuts consecutive non-overlapping windows of `window_len` tokens from
/// `stream` (a trailing partial window is dropped), fits a Zipf coefficient
/// per window and aggregates at most `max_windows` of the valid ones,
/// chosen by a seeded sample and kept in stream order.
pub fn burstiness_report<T: Hash + Eq + Sync>(
    stream: &[T],
    window_len: usize,
    max_windows: usize,
    seed: u64,
) -> Result<ZipfReport> {
    if window_len == 0 || max_windows == 0 {
        return Err(Error::config("window_len and max_windows must be positive"));
    }
    let total_windows = stream.len() / window_len;
    let fits: Vec<Option<f64>> = stream.par_chunks_exact(window_len).map(|w| zipf_coefficient(w).ok()).collect();
    let degenerate_windows = fits.iter().filter(|f| f.is_none()).count();
    let mut valid: Vec<f64> = fits.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(Error::Degenerate(format!(
            "no valid window of length {window_len} in a stream of {} tokens",
            stream.len()
        )));
    }
    if valid.len() > max_windows {
        let mut picks = sample_indices(valid.len(), max_windows, seed);
        picks.sort_unstable();
        valid = picks.into_iter().map(|i| valid[i]).collect();
    }
    let (mean, std) = mean_std(&valid);
    Ok(ZipfReport {
        window_len,
        n_windows: valid.len(),
        mean,
        std,
        coefficients: valid,
        total_windows,
        degenerate_windows,
    })
}

/// `m` distinct indices out of `0..n` by a partial Fisher-Yates shuffle.
fn sample_indices(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut r = rng::seeded(seed);
    for i in 0..m.min(n) {
        let j = r.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

/// Turns packed examples into one surrogate-token stream: each document's
/// tokens are its index-tokenizer terms, interned to ids in order of first
/// appearance. A partial segment selects terms by position in token mode
/// and tokenizes its character slice in character mode.
pub fn surrogate_tokens(examples: &[PackedExample], corpus: &Corpus) -> Result<Vec<u32>> {
    let mut vocab: HashMap<String, u32> = HashMap::new();
    let mut out = Vec::new();
    let mut push = |term: &str, out: &mut Vec<u32>| {
        let next = vocab.len() as u32;
        let id = match vocab.get(term) {
            Some(&id) => id,
            None => {
                vocab.insert(term.to_string(), next);
                next
            }
        };
        out.push(id);
    };
    for ex in examples {
        for seg in &ex.segments {
            let doc = corpus.by_id(&seg.doc_id).ok_or_else(|| Error::UnknownDocument(seg.doc_id.clone()))?;
            if !seg.truncated && seg.offset == 0 {
                for_each_term(doc.text(), |t| push(t, &mut out));
                continue;
            }
            match corpus.length_unit() {
                LengthUnit::Tokens => {
                    for t in tokenize(doc.text()).iter().skip(seg.offset).take(seg.len) {
                        push(t, &mut out);
                    }
                }
                LengthUnit::Chars => {
                    let slice: String = doc.text().chars().skip(seg.offset).take(seg.len).collect();
                    for_each_term(&slice, |t| push(t, &mut out));
                }
            }
        }
    }
    Ok(out)
}

/// Percentile bootstrap confidence interval for `mean(a) - mean(b)`,
/// resampling each group independently.
pub fn bootstrap_mean_diff_ci(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() || resamples == 0 {
        return Err(Error::config("bootstrap needs two nonempty samples and at least one resample"));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::config(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let mut r = rng::seeded(seed);
    let mut resample_mean = |xs: &[f64]| -> f64 {
        let n = xs.len();
        (0..n).map(|_| xs[r.random_range(0..n)]).sum::<f64>() / n as f64
    };
    let mut diffs: Vec<f64> = (0..resamples).map(|_| resample_mean(a) - resample_mean(b)).collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let at = |q: f64| diffs[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok((at(tail), at(1.0 - tail)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    /// 0-based token position.
    pub pos: u64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBucket {
    /// Inclusive lower bound on the 1-based position.
    pub lo: u64,
    /// Exclusive upper bound, except for the last bucket which includes it.
    pub hi: u64,
    pub count: u64,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketedLosses {
    pub buckets: Vec<LossBucket>,
    /// Records past position 32768 (1-based).
    pub ignored: u64,
}

/// Bucket of a 0-based position: `i` with `2^i <= pos + 1 < 2^(i+1)`, the
/// last bucket also holding `pos + 1 = 32768`. `None` beyond that.
pub fn loss_bucket(pos: u64) -> Option<usize> {
    let p = pos.checked_add(1)?;
    if p > MAX_LOSS_POSITION {
        return None;
    }
    Some(((63 - p.leading_zeros()) as usize).min(N_LOSS_BUCKETS - 1))
}

pub fn bucket_losses<I: IntoIterator<Item = LossRecord>>(records: I) -> Result<BucketedLosses> {
    let mut sums = [0.0f64; N_LOSS_BUCKETS];
    let mut counts = [0u64; N_LOSS_BUCKETS];
    let mut ignored = 0;
    for (index, rec) in records.into_iter().enumerate() {
        if !rec.loss.is_finite() {
            return Err(Error::NonFinite { what: "loss", index });
        }
        match loss_bucket(rec.pos) {
            Some(b) => {
                sums[b] += rec.loss;
                counts[b] += 1;
            }
            None => ignored += 1,
        }
    }
    let buckets = (0..N_LOSS_BUCKETS)
        .map(|i| LossBucket {
            lo: 1 << i,
            hi: 1 << (i + 1),
            count: counts[i],
            mean: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
        })
        .collect();
    Ok(BucketedLosses { buckets, ignored })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub edges: Vec<usize>,
    /// `counts[i]` holds lengths in `[edges[i], edges[i + 1])`.
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl LengthHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Histogram over half-open bins; values outside `[edges[0], edges[last])`
/// land in `underflow` / `overflow` so the total always equals the input
/// count.
pub fn length_histogram<I: IntoIterator<Item = usize>>(lengths: I, edges: &[usize]) -> Result<LengthHistogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("histogram edges must be at least two strictly increasing values"));
    }
    let mut hist =
        LengthHistogram { edges: edges.to_vec(), counts: vec![0; edges.len() - 1], underflow: 0, overflow: 0 };
    for len in lengths {
        match edges.partition_point(|&e| e <= len) {
            0 => hist.underflow += 1,
            i if i == edges.len() => hist.overflow += 1,
            i => hist.counts[i - 1] += 1,
        }
    }
    Ok(hist)
}

/// Powers of two from 1 up to and including `max`, as histogram edges.
pub fn power_of_two_edges(max: usize) -> Vec<usize> {
    let mut edges = vec![0];
    let mut e = 1;
    while e <= max {
        edges.push(e);
        e *= 2;
    }
    edges.push(e);
    edges
}
