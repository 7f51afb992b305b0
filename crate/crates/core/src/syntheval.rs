//! Key-value retrieval prompts: a JSON object of random UUID pairs followed
//! by one of its keys, to be completed with the matching value.

use std::collections::HashSet;
use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const KV_INSTRUCTION: &str = "Extract the value corresponding to the specified key in the JSON object below.";

/// Prompt whitespace. The default reproduces the reference listing: pairs
/// after the first start on a new line indented by one space, and the query
/// line uses the same indent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvLayout {
    pub pair_indent: String,
    pub query_indent: String,
}

impl Default for KvLayout {
    fn default() -> Self {
        Self { pair_indent: " ".into(), query_indent: " ".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvTask {
    pub prompt: String,
    pub query_key: String,
    pub answer: String,
    pub n_pairs: usize,
    pub answer_position: usize,
    /// All pairs in prompt order.
    pub pairs: Vec<(String, String)>,
}

/// `n` distinct lowercase hyphenated version-4 UUIDs drawn from `r`.
fn distinct_uuids(n: usize, r: &mut rng::SeededRng) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut bytes = [0u8; 16];
        r.fill_bytes(&mut bytes);
        let id = uuid::Builder::from_random_bytes(bytes).into_uuid();
        if seen.insert(id) {
            out.push(id.hyphenated().to_string());
        }
    }
    out
}

pub fn render_kv_prompt(pairs: &[(String, String)], query_key: &str, layout: &KvLayout) -> String {
    let mut p = String::with_capacity(KV_INSTRUCTION.len() + 16 + pairs.len() * 84);
    p.push_str(KV_INSTRUCTION);
    p.push_str("\n\nJSON data:\n{");
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            p.push_str(",\n");
            p.push_str(&layout.pair_indent);
        }
        p.push_str(&format!("\"{k}\": \"{v}\""));
    }
    p.push_str("}\n");
    p.push_str(&layout.query_indent);
    p.push_str(&format!("\"{query_key}\":"));
    p
}

pub fn gen_kv_task(n_pairs: usize, answer_position: usize, seed: u64) -> Result<KvTask> {
    gen_kv_task_with(n_pairs, answer_position, seed, &KvLayout::default())
}

pub fn gen_kv_task_with(n_pairs: usize, answer_position: usize, seed: u64, layout: &KvLayout) -> Result<KvTask> {
    if answer_position >= n_pairs {
        return Err(Error::config(format!("answer position {answer_position} out of range for {n_pairs} pairs")));
    }
    let ids = distinct_uuids(2 * n_pairs, &mut rng::seeded(seed));
    let pairs: Vec<(String, String)> = ids.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect();
    let (query_key, answer) = pairs[answer_position].clone();
    Ok(KvTask {
        prompt: render_kv_prompt(&pairs, &query_key, layout),
        query_key,
        answer,
        n_pairs,
        answer_position,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvRecord {
    pub prompt: String,
    pub answer: String,
    pub position: usize,
    pub n_pairs: usize,
    pub seed: u64,
}

/// Seed of the `j`-th task at `position`, independent of how many other
/// positions the suite contains.
pub fn kv_task_seed(seed: u64, position: usize, j: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(seed, position as u64), j as u64)
}

pub fn gen_kv_suite(n_pairs: usize, positions: &[usize], per_position: usize, seed: u64) -> Result<Vec<KvRecord>> {
    gen_kv_suite_with(n_pairs, positions, per_position, seed, &KvLayout::default())
}

pub fn gen_kv_suite_with(
    n_pairs: usize,
    positions: &[usize],
    per_position: usize,
    seed: u64,
    layout: &KvLayout,
) -> Result<Vec<KvRecord>> {
    if let Some(&bad) = positions.iter().find(|&&p| p >= n_pairs) {
        return Err(Error::config(format!("answer position {bad} out of range for {n_pairs} pairs")));
    }
    let mut out = Vec::with_capacity(positions.len() * per_position);
    for &position in positions {
        for j in 0..per_position {
            let task_seed = kv_task_seed(seed, position, j);
            let task = gen_kv_task_with(n_pairs, position, task_seed, layout)?;
            out.push(KvRecord { prompt: task.prompt, answer: task.answer, position, n_pairs, seed: task_seed });
        }
    }
    Ok(out)
}

pub fn write_kv_suite<W: Write>(records: &[KvRecord], out: &mut W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Splits a prompt back into its JSON object text and query key. Returns
/// `None` if the prompt does not have the expected outline.
pub fn split_kv_prompt(prompt: &str) -> Option<(&str, &str)> {
    let body = prompt.strip_prefix(KV_INSTRUCTION)?.strip_prefix("\n\nJSON data:\n")?;
    let (object, query) = body.rsplit_once('\n')?;
    let key = query.trim_start().strip_prefix('"')?.strip_suffix("\":")?;
    Some((object, key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_prompt() {
        let t = gen_kv_task(1, 0, 9).unwrap();
        assert_eq!(t.pairs.len(), 1);
        assert_eq!(t.answer, t.pairs[0].1);
        let expected =
            format!("{KV_INSTRUCTION}\n\nJSON data:\n{{\"{}\": \"{}\"}}\n \"{}\":", t.query_key, t.answer, t.query_key);
        assert_eq!(t.prompt, expected);
    }

    #[test]
    fn uuids_are_v4_and_distinct() {
        let t = gen_kv_task(300, 150, 1).unwrap();
        let all: HashSet<&str> = t.pairs.iter().flat_map(|(k, v)| [k.as_str(), v.as_str()]).collect();
        assert_eq!(all.len(), 600);
        for id in all {
            let u = uuid::Uuid::parse_str(id).unwrap();
            assert_eq!(u.get_version_num(), 4);
            assert_eq!(id, id.to_lowercase());
            assert_eq!(id.len(), 36);
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(gen_kv_task(20, 3, 5).unwrap(), gen_kv_task(20, 3, 5).unwrap());
        assert_ne!(gen_kv_task(20, 3, 5).unwrap().prompt, gen_kv_task(20, 3, 6).unwrap().prompt);
    }

    #[test]
    fn position_out_of_range() {
        assert!(gen_kv_task(3, 3, 0).is_err());
        assert!(gen_kv_suite(3, &[0, 4], 1, 0).is_err());
    }

    #[test]
    fn prompt_round_trips() {
        let t = gen_kv_task(5, 2, 0).unwrap();
        let (object, key) = split_kv_prompt(&t.prompt).unwrap();
        assert_eq!(key, t.query_key);
        let parsed: serde_json::Map<String, serde_json::Value> = serde_json::from_str(object).unwrap();
        assert_eq!(parsed.len(), 5);
        assert_eq!(parsed[key], t.answer.as_str());
    }

    #[test]
    fn suite_shape() {
        let s = gen_kv_suite(10, &[0, 9], 3, 1).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.iter().filter(|r| r.position == 9).count(), 3);
        let mut buf = Vec::new();
        write_kv_suite(&s, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 6);
    }
}
