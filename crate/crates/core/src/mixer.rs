//! Weighted mixing of packed example streams and BOS/EOS separation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packer::PackedExample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePart {
    pub name: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separator {
    #[default]
    None,
    BosEos,
}

/// What the scheduler balances: emitted length units or example counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metering {
    #[default]
    Length,
    Examples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub parts: Vec<MixturePart>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub separator: Separator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bos_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eos_id: Option<u32>,
    #[serde(default)]
    pub metering: Metering,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.parts.is_empty() {
            return Err(Error::config("mixture spec has no parts"));
        }
        let mut names = std::collections::HashSet::new();
        for part in &self.parts {
            if !(part.weight.is_finite() && part.weight > 0.0) {
                return Err(Error::config(format!("weight of `{}` must be positive, got {}", part.name, part.weight)));
            }
            if !names.insert(part.name.as_str()) {
                return Err(Error::config(format!("part `{}` listed twice", part.name)));
            }
        }
        let total: f64 = self.parts.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("weights sum to {total}, not 1")));
        }
        if self.separator == Separator::BosEos && (self.bos_id.is_none() || self.eos_id.is_none()) {
            return Err(Error::config("bos_eos separator needs bos_id and eos_id"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamShare {
    pub name: String,
    pub weight: f64,
    pub examples: usize,
    pub length: usize,
    /// Output position at which the stream ran dry, if it did.
    pub exhausted_at: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MixOutput {
    pub examples: Vec<PackedExample>,
    pub shares: Vec<StreamShare>,
}

/// Interleaves the named streams. Each step emits the next example of the
/// active stream with the smallest `emitted / weight`, ties broken by name.
/// A stream drops out right after its last example.
pub fn mix(spec: &MixtureSpec, streams: Vec<(String, Vec<PackedExample>)>) -> Result<MixOutput> {
    spec.validate()?;
    let mut by_name: std::collections::HashMap<String, Vec<PackedExample>> = streams.into_iter().collect();

    struct Active {
        name: String,
        weight: f64,
        items: std::vec::IntoIter<PackedExample>,
        metered: f64,
        share: StreamShare,
    }

    let mut active = Vec::with_capacity(spec.parts.len());
    for part in &spec.parts {
        let items =
            by_name.remove(&part.name).ok_or_else(|| Error::config(format!("no stream named `{}`", part.name)))?;
        active.push(Active {
            name: part.name.clone(),
            weight: part.weight,
            items: items.into_iter(),
            metered: 0.0,
            share: StreamShare {
                name: part.name.clone(),
                weight: part.weight,
                examples: 0,
                length: 0,
                exhausted_at: None,
            },
        });
    }
    active.sort_by(|a, b| a.name.cmp(&b.name));

    let mut out = Vec::new();
    let mut done = Vec::new();
    let retire = |gone: Active, at: usize, left: usize, done: &mut Vec<StreamShare>| {
        if left > 0 {
            log::warn!("stream `{}` exhausted after {} examples", gone.name, gone.share.examples);
        }
        let mut share = gone.share;
        share.exhausted_at = Some(at);
        done.push(share);
    };
    let mut i = 0;
    while i < active.len() {
        if active[i].items.len() == 0 {
            let gone = active.remove(i);
            let left = active.len();
            retire(gone, 0, left, &mut done);
        } else {
            i += 1;
        }
    }
    while !active.is_empty() {
        let pick = (0..active.len())
            .min_by(|&i, &j| {
                let (a, b) = (&active[i], &active[j]);
                (a.metered / a.weight).total_cmp(&(b.metered / b.weight)).then_with(|| a.name.cmp(&b.name))
            })
            .expect("nonempty");
        let stream = &mut active[pick];
        let ex = stream.items.next().expect("active streams are nonempty");
        stream.metered += match spec.metering {
            Metering::Length => ex.total_len as f64,
            Metering::Examples => 1.0,
        };
        stream.share.examples += 1;
        stream.share.length += ex.total_len;
        out.push(ex);
        if stream.items.len() == 0 {
            let gone = active.remove(pick);
            let left = active.len();
            retire(gone, out.len(), left, &mut done);
        }
    }
    let mut shares = done;
    shares.sort_by_key(|s| spec.parts.iter().position(|p| p.name == s.name));
    Ok(MixOutput { examples: out, shares })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatedStream {
    pub tokens: Vec<u32>,
    pub bos: usize,
    pub eos: usize,
}

/// Flattens token-materialized examples into one stream. With `bos_eos`
/// every example is wrapped as `BOS … EOS`; documents inside an example are
/// never separated.
pub fn emit_separated(examples: &[Vec<u32>], spec: &MixtureSpec) -> Result<SeparatedStream> {
    let total: usize = examples.iter().map(Vec::len).sum();
    match spec.separator {
        Separator::None => Ok(SeparatedStream { tokens: examples.concat(), bos: 0, eos: 0 }),
        Separator::BosEos => {
            let (Some(bos), Some(eos)) = (spec.bos_id, spec.eos_id) else {
                return Err(Error::config("bos_eos separator needs bos_id and eos_id"));
            };
            let mut tokens = Vec::with_capacity(total + 2 * examples.len());
            for ex in examples {
                tokens.push(bos);
                tokens.extend_from_slice(ex);
                tokens.push(eos);
            }
            Ok(SeparatedStream { tokens, bos: examples.len(), eos: examples.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packer::{Method, Order, Segment};

    fn ex(tag: &str, len: usize) -> PackedExample {
        PackedExample {
            segments: vec![Segment { doc_id: tag.into(), offset: 0, len, truncated: false }],
            total_len: len,
            root: None,
            edges: vec![],
            method: Method::Baseline,
            order: Order::Identity,
            seed: 0,
        }
    }

    fn spec(parts: &[(&str, f64)]) -> MixtureSpec {
        MixtureSpec {
            parts: parts.iter().map(|(n, w)| MixturePart { name: n.to_string(), weight: *w, path: None }).collect(),
            seed: 0,
            separator: Separator::None,
            bos_id: None,
            eos_id: None,
            metering: Metering::Length,
        }
    }

    fn tags(out: &MixOutput) -> Vec<&str> {
        out.examples.iter().map(|e| e.segments[0].doc_id.as_str()).collect()
    }

    #[test]
    fn single_stream_passthrough() {
        let items = vec![ex("a", 3), ex("b", 1), ex("c", 9)];
        let out = mix(&spec(&[("s", 1.0)]), vec![("s".into(), items.clone())]).unwrap();
        assert_eq!(out.examples, items);
    }

    #[test]
    fn equal_weights_alternate() {
        let a = (0..4).map(|i| ex(&format!("a{i}"), 5)).collect();
        let b = (0..4).map(|i| ex(&format!("b{i}"), 5)).collect();
        let out = mix(&spec(&[("b", 0.5), ("a", 0.5)]), vec![("a".into(), a), ("b".into(), b)]).unwrap();
        assert_eq!(tags(&out), ["a0", "b0", "a1", "b1", "a2", "b2", "a3", "b3"]);
    }

    #[test]
    fn exhausted_stream_drops_out() {
        let a = vec![ex("a0", 5)];
        let b = (0..3).map(|i| ex(&format!("b{i}"), 5)).collect();
        let out = mix(&spec(&[("a", 0.5), ("b", 0.5)]), vec![("a".into(), a), ("b".into(), b)]).unwrap();
        assert_eq!(tags(&out), ["a0", "b0", "b1", "b2"]);
        assert_eq!(out.shares[0].exhausted_at, Some(1));
        assert_eq!(out.shares[1].exhausted_at, Some(4));
    }

    #[test]
    fn spec_errors() {
        assert!(mix(&spec(&[]), vec![]).is_err());
        assert!(mix(&spec(&[("a", 0.6), ("b", 0.6)]), vec![]).is_err());
        assert!(mix(&spec(&[("a", 1.0)]), vec![("b".into(), vec![])]).is_err());
        let mut s = spec(&[("a", 1.0)]);
        s.separator = Separator::BosEos;
        assert!(s.validate().is_err());
    }

    #[test]
    fn separators_fence_examples() {
        let mut s = spec(&[("a", 1.0)]);
        let examples = vec![vec![1, 2], vec![3], vec![4, 5, 6]];
        let plain = emit_separated(&examples, &s).unwrap();
        assert_eq!(plain.tokens, [1, 2, 3, 4, 5, 6]);

        s.separator = Separator::BosEos;
        assert!(emit_separated(&examples, &s).is_err());
        s.bos_id = Some(100);
        s.eos_id = Some(101);
        let sep = emit_separated(&examples, &s).unwrap();
        assert_eq!(sep.tokens, [100, 1, 2, 101, 100, 3, 101, 100, 4, 5, 6, 101]);
        assert_eq!((sep.bos, sep.eos), (3, 3));
    }

    #[test]
    fn spec_json_shape() {
        let s: MixtureSpec = serde_json::from_str(
            r#"{"parts":[{"name":"rp","weight":0.5,"path":"rp.jsonl"},{"name":"se","weight":0.25,"path":"se.jsonl"},{"name":"c","weight":0.25,"path":"c.jsonl"}],"seed":1,"separator":"bos_eos","bos_id":1,"eos_id":2}"#,
        )
        .unwrap();
        s.validate().unwrap();
        assert_eq!(s.separator, Separator::BosEos);
        assert_eq!(s.metering, Metering::Length);
    }
}
