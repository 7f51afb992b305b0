mod common;

use common::Bm25Oracle;
use proptest::prelude::*;
use rand::Rng;
use splice_core::retrieval::Retriever;
use splice_core::{rng, Bm25Index, Bm25Params, Corpus, Document};

const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi",
    "omicron", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega", "Alpha", "x1", "y2",
];

fn random_docs(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let len = r.random_range(0..40);
            let text: Vec<&str> = (0..len)
                .map(|_| {
                    // Skewed word choice gives shared terms and score ties.
                    let a = r.random_range(0..WORDS.len());
                    let b = r.random_range(0..WORDS.len());
                    WORDS[a.min(b)]
                })
                .collect();
            let sep = if r.random_bool(0.3) { ", " } else { " " };
            (format!("doc{i}"), text.join(sep))
        })
        .collect()
}

fn corpus_of(docs: &[(String, String)]) -> Corpus {
    Corpus::new(docs.iter().map(|(id, t)| Document::new(id.clone(), t.clone())).collect()).unwrap()
}

fn assert_matches_oracle(docs: &[(String, String)], params: Bm25Params, k: usize) {
    let corpus = corpus_of(docs);
    let index = Bm25Index::build(&corpus, params).unwrap();
    let oracle = Bm25Oracle::new(docs, params.k1, params.b, params.query_cap);
    for (d, doc) in corpus.documents().iter().enumerate() {
        let got = index.query_doc(doc, k).unwrap();
        let want = oracle.query(doc.text(), k, Some(d));
        let got_ids: Vec<&str> = got.iter().map(|n| n.id.as_str()).collect();
        let want_ids: Vec<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(got_ids, want_ids, "ranking for {}", doc.id());
        for (g, (_, w)) in got.iter().zip(&want) {
            assert!((g.score - w).abs() <= 1e-9 * w.abs().max(1.0), "{} vs {w}", g.score);
        }
    }
}

#[test]
fn rankings_equal_exhaustive_scorer() {
    for seed in 0..8 {
        let docs = random_docs(30 + 40 * seed as usize, seed);
        for k in [1, 3, 10] {
            assert_matches_oracle(&docs, Bm25Params::default(), k);
        }
    }
}

#[test]
fn query_cap_limits_query_terms() {
    let docs = random_docs(120, 99);
    assert_matches_oracle(&docs, Bm25Params { query_cap: 3, ..Default::default() }, 5);
}

#[test]
fn idf_matches_formula() {
    let docs = random_docs(50, 5);
    let index = Bm25Index::build(&corpus_of(&docs), Bm25Params::default()).unwrap();
    let oracle = Bm25Oracle::new(&docs, 1.2, 0.75, 1024);
    for t in index.terms() {
        assert!((index.idf(t).unwrap() - oracle.idf(t)).abs() < 1e-12);
    }
}

#[test]
fn retriever_and_free_text_agree() {
    let docs = random_docs(80, 3);
    let corpus = corpus_of(&docs);
    let index = Bm25Index::build(&corpus, Bm25Params::default()).unwrap();
    for d in 0..corpus.len() {
        let via_trait = index.retrieve(&corpus, d, 4).unwrap();
        let via_text = index.query_text(corpus.get(d).text(), 4, Some(d));
        assert_eq!(via_trait, via_text);
        assert!(via_trait.iter().all(|n| n.id != corpus.get(d).id()));
    }
}

#[test]
fn save_load_round_trip() {
    let docs = random_docs(60, 11);
    let corpus = corpus_of(&docs);
    let index = Bm25Index::build(&corpus, Bm25Params::default()).unwrap();
    let mut bytes = Vec::new();
    index.write_to(&mut bytes).unwrap();
    let back = Bm25Index::from_bytes(&bytes).unwrap();
    back.check_matches(&corpus).unwrap();
    let mut again = Vec::new();
    back.write_to(&mut again).unwrap();
    assert_eq!(bytes, again);
    for d in 0..corpus.len() {
        assert_eq!(index.retrieve(&corpus, d, 5).unwrap(), back.retrieve(&corpus, d, 5).unwrap());
    }
    assert!(Bm25Index::from_bytes(&bytes[..bytes.len() - 1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_rankings_equal_oracle(n in 1usize..60, seed in any::<u64>(), k in 1usize..8, b in 0.0f64..=1.0) {
        let docs = random_docs(n, seed);
        assert_matches_oracle(&docs, Bm25Params { k1: 1.2, b, query_cap: 1024 }, k);
    }

    #[test]
    fn prop_scores_positive_and_sorted(seed in any::<u64>()) {
        let docs = random_docs(40, seed);
        let corpus = corpus_of(&docs);
        let index = Bm25Index::build(&corpus, Bm25Params::default()).unwrap();
        for d in 0..corpus.len() {
            let got = index.retrieve(&corpus, d, 6).unwrap();
            prop_assert!(got.len() <= 6);
            prop_assert!(got.iter().all(|n| n.score > 0.0));
            prop_assert!(got.windows(2).all(|w| w[0].score > w[1].score || (w[0].score == w[1].score && w[0].id < w[1].id)));
        }
    }
}
