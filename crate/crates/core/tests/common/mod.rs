#![allow(dead_code)]

use std::sync::Arc;

use mglda::corpus::{Corpus, Document, Sentence, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_from(docs: Vec<Vec<Vec<u32>>>, vocab: usize) -> Arc<Corpus> {
    let documents = docs
        .into_iter()
        .enumerate()
        .map(|(i, sentences)| Document {
            id: format!("d{i}"),
            sentences: sentences
                .into_iter()
                .map(|tokens| Sentence { tokens, span: (0, 0) })
                .collect(),
            ratings: None,
        })
        .collect();
    let vocab = Vocabulary::from_terms((0..vocab).map(|w| format!("w{w}")).collect()).unwrap();
    Arc::new(Corpus::from_parts(documents, vocab, 5).unwrap())
}

/// Random corpus with at most `max_tokens` tokens; sentences may be empty but
/// every document has at least one token.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_tokens: usize, vocab: usize) -> Arc<Corpus> {
    let total = rng.random_range(1..=max_tokens);
    let num_docs = rng.random_range(1..=total.min(3));
    let mut remaining = total;
    let mut docs = Vec::new();
    for d in 0..num_docs {
        let left_docs = num_docs - d - 1;
        let take = if left_docs == 0 {
            remaining
        } else {
            rng.random_range(1..=remaining - left_docs)
        };
        remaining -= take;
        let num_sentences = rng.random_range(1..=3);
        let mut sentences = vec![Vec::new(); num_sentences];
        for _ in 0..take {
            let s = rng.random_range(0..num_sentences);
            sentences[s].push(rng.random_range(0..vocab as u32));
        }
        docs.push(sentences);
    }
    corpus_from(docs, vocab)
}

pub fn random_large_corpus(seed: u64, tokens: usize, vocab: usize) -> Arc<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut left = tokens;
    while left > 0 {
        let mut doc = Vec::new();
        for _ in 0..rng.random_range(1..8) {
            let len = rng.random_range(0..10).min(left);
            left -= len;
            doc.push((0..len).map(|_| rng.random_range(0..vocab as u32)).collect());
        }
        if doc.iter().any(|s: &Vec<u32>| !s.is_empty()) {
            docs.push(doc);
        }
    }
    corpus_from(docs, vocab)
}

/// Largest relative error between two equally shaped probability vectors.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Normalizes `exp(log_values - max)`.
pub fn softmax(log_values: &[f64]) -> Vec<f64> {
    let m = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = log_values.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}
