//! Sentence topic profiles and sparse binary features for the ranker.
//!
//! A profile is estimated by resampling one document many times with every
//! other document frozen, and counting how many of a sentence's words land in
//! each topic. Probabilities are bucketed by training-set quantiles and
//! conjoined with the sentence's words.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::lda::LdaState;
use crate::mglda::{Assignment, Granularity, MgldaState};
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_BUCKETS: usize = 5;
pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_MIN_TRIGRAM_DF: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mglda,
    Lda,
}

impl ModelKind {
    /// Short tag used inside feature names.
    pub fn feature_tag(self) -> &'static str {
        match self {
            ModelKind::Mglda => "mg",
            ModelKind::Lda => "lda",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Mglda => "mglda",
            ModelKind::Lda => "lda",
        })
    }
}

/// What a sampler must offer for document-level resampling.
pub trait DocumentResampler<F: Scalar> {
    type Saved;

    fn kind(&self) -> ModelKind;
    fn corpus_ref(&self) -> &Corpus;
    /// Size of the topic set reported in profiles.
    fn profile_topics(&self) -> usize;
    fn save_document(&self, d: usize) -> Self::Saved;
    fn restore_saved(&mut self, d: usize, saved: &Self::Saved);
    fn resample_document(&mut self, d: usize, rng: &mut ChaCha8Rng);
    /// Adds, for each sentence of `d`, the number of its words assigned to each
    /// profile topic.
    fn add_sentence_topic_counts(&self, d: usize, acc: &mut [Vec<F>]);
}

impl<F: Scalar> DocumentResampler<F> for MgldaState<F> {
    type Saved = Vec<Assignment>;

    fn kind(&self) -> ModelKind {
        ModelKind::Mglda
    }

    fn corpus_ref(&self) -> &Corpus {
        self.corpus()
    }

    // Only local topics describe ratable aspects; global mass is dropped.
    fn profile_topics(&self) -> usize {
        self.hyperparams().k_local
    }

    fn save_document(&self, d: usize) -> Vec<Assignment> {
        self.assignments()[d].clone()
    }

    fn restore_saved(&mut self, d: usize, saved: &Vec<Assignment>) {
        self.restore_document(d, saved);
    }

    fn resample_document(&mut self, d: usize, rng: &mut ChaCha8Rng) {
        self.sweep_document_with(d, rng);
    }

    fn add_sentence_topic_counts(&self, d: usize, acc: &mut [Vec<F>]) {
        let mut i = 0;
        for (s, sentence) in self.corpus().documents()[d].sentences.iter().enumerate() {
            for _ in &sentence.tokens {
                let a = self.assignments()[d][i];
                if a.granularity == Granularity::Local {
                    let slot = &mut acc[s][a.topic as usize];
                    *slot = *slot + F::one();
                }
                i += 1;
            }
        }
    }
}

impl<F: Scalar> DocumentResampler<F> for LdaState<F> {
    type Saved = Vec<u32>;

    fn kind(&self) -> ModelKind {
        ModelKind::Lda
    }

    fn corpus_ref(&self) -> &Corpus {
        self.corpus()
    }

    fn profile_topics(&self) -> usize {
        self.params().k
    }

    fn save_document(&self, d: usize) -> Vec<u32> {
        self.assignments()[d].clone()
    }

    fn restore_saved(&mut self, d: usize, saved: &Vec<u32>) {
        self.restore_document(d, saved);
    }

    fn resample_document(&mut self, d: usize, rng: &mut ChaCha8Rng) {
        self.sweep_document_with(d, rng);
    }

    fn add_sentence_topic_counts(&self, d: usize, acc: &mut [Vec<F>]) {
        let mut i = 0;
        for (s, sentence) in self.corpus().documents()[d].sentences.iter().enumerate() {
            for _ in &sentence.tokens {
                let z = self.assignments()[d][i] as usize;
                acc[s][z] = acc[s][z] + F::one();
                i += 1;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SentenceTopicProfile<F> {
    #[serde(rename = "doc")]
    pub doc_id: String,
    pub sentence: usize,
    pub probs: Vec<F>,
}

/// Per-sample proportions kept by [`resample_doc_traced`]:
/// `samples[k][s][z]`.
pub type ResampleTrace<F> = Vec<Vec<Vec<F>>>;

/// Averages sentence topic proportions over `samples` sweeps of document `d`,
/// with every other document's assignments held fixed. The sampler is
/// returned to its exact prior state afterwards.
///
/// The random stream is derived from `seed` and `d`, so profiles do not depend
/// on the order documents are processed in.
pub fn resample_doc<F: Scalar, S: DocumentResampler<F>>(
    state: &mut S,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<SentenceTopicProfile<F>>> {
    resample_inner(state, d, samples, seed, None)
}

/// Like [`resample_doc`] but also returns every sample's proportions.
pub fn resample_doc_traced<F: Scalar, S: DocumentResampler<F>>(
    state: &mut S,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<(Vec<SentenceTopicProfile<F>>, ResampleTrace<F>)> {
    let mut trace = Vec::with_capacity(samples);
    let profiles = resample_inner(state, d, samples, seed, Some(&mut trace))?;
    Ok((profiles, trace))
}

fn resample_inner<F: Scalar, S: DocumentResampler<F>>(
    state: &mut S,
    d: usize,
    samples: usize,
    seed: u64,
    mut trace: Option<&mut ResampleTrace<F>>,
) -> Result<Vec<SentenceTopicProfile<F>>> {
    let corpus = state.corpus_ref();
    let doc = corpus.document(d).ok_or(Error::DocOutOfRange {
        index: d,
        len: corpus.len(),
    })?;
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let doc_id = doc.id.clone();
    let lengths: Vec<usize> = doc.sentences.iter().map(|s| s.len()).collect();
    let k = state.profile_topics();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d as u64);
    let saved = state.save_document(d);
    let mut totals = vec![vec![F::zero(); k]; lengths.len()];
    let mut sample = vec![vec![F::zero(); k]; lengths.len()];
    for _ in 0..samples {
        state.resample_document(d, &mut rng);
        sample.iter_mut().flatten().for_each(|x| *x = F::zero());
        state.add_sentence_topic_counts(d, &mut sample);
        for (tot, cur) in totals.iter_mut().zip(&sample) {
            for (t, &c) in tot.iter_mut().zip(cur) {
                *t = *t + c;
            }
        }
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(proportions(&sample, &lengths, F::one()));
        }
    }
    state.restore_saved(d, &saved);

    let samples_f = F::from_usize_lossy(samples);
    Ok(proportions(&totals, &lengths, samples_f)
        .into_iter()
        .enumerate()
        .map(|(s, probs)| SentenceTopicProfile {
            doc_id: doc_id.clone(),
            sentence: s,
            probs,
        })
        .collect())
}

fn proportions<F: Scalar>(counts: &[Vec<F>], lengths: &[usize], samples: F) -> Vec<Vec<F>> {
    counts
        .iter()
        .zip(lengths)
        .map(|(row, &len)| {
            if len == 0 {
                return vec![F::zero(); row.len()];
            }
            let den = samples * F::from_usize_lossy(len);
            row.iter().map(|&c| c / den).collect()
        })
        .collect()
}

/// Profiles for every document of the sampler's corpus.
pub fn profile_corpus<F: Scalar, S: DocumentResampler<F>>(
    state: &mut S,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<SentenceTopicProfile<F>>>> {
    (0..state.corpus_ref().len())
        .map(|d| resample_doc(state, d, samples, seed))
        .collect()
}

/// Quantile thresholds for discretizing topic probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Bucketizer<F> {
    pub thresholds: Vec<F>,
}

impl<F: Scalar> Bucketizer<F> {
    /// Thresholds at the `j / buckets` quantiles (`j = 1..buckets`) of the
    /// nonzero values, linearly interpolated between order statistics.
    pub fn fit(values: impl IntoIterator<Item = F>, buckets: usize) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::Invalid("bucket count must be positive".into()));
        }
        let mut v: Vec<F> = values.into_iter().filter(|&x| x > F::zero()).collect();
        if v.is_empty() {
            return Err(Error::NothingToBucketize);
        }
        v.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are not NaN"));
        let last = F::from_usize_lossy(v.len() - 1);
        let thresholds = (1..buckets)
            .map(|j| {
                let pos = last * F::from_usize_lossy(j) / F::from_usize_lossy(buckets);
                let lo = pos.floor();
                let i = lo.to_usize().unwrap_or(0);
                let frac = pos - lo;
                match v.get(i + 1) {
                    Some(&next) => v[i] + (next - v[i]) * frac,
                    None => v[i],
                }
            })
            .collect();
        Ok(Self { thresholds })
    }

    /// Bucket fitted over every nonzero probability in `profiles`.
    pub fn fit_profiles<'a>(
        profiles: impl IntoIterator<Item = &'a SentenceTopicProfile<F>>,
        buckets: usize,
    ) -> Result<Self> {
        Self::fit(
            profiles.into_iter().flat_map(|p| p.probs.iter().copied()),
            buckets,
        )
    }

    pub fn buckets(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Number of thresholds strictly below `p`; ties fall to the lower bucket.
    pub fn bucket(&self, p: F) -> usize {
        self.thresholds.iter().filter(|&&t| t < p).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub bigrams: bool,
    pub trigrams: bool,
    pub min_trigram_df: usize,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self {
            bigrams: true,
            trigrams: true,
            min_trigram_df: DEFAULT_MIN_TRIGRAM_DF,
        }
    }
}

impl NgramConfig {
    pub fn unigrams_only() -> Self {
        Self {
            bigrams: false,
            trigrams: false,
            min_trigram_df: DEFAULT_MIN_TRIGRAM_DF,
        }
    }
}

/// Which n-grams are emitted; trigrams are kept only if frequent in training.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NgramVocab {
    pub config: NgramConfig,
    frequent_trigrams: HashSet<[u32; 3]>,
}

impl NgramVocab {
    pub fn fit<'a>(config: NgramConfig, training: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut frequent_trigrams = HashSet::new();
        if config.trigrams {
            let mut df: HashMap<[u32; 3], usize> = HashMap::new();
            for doc in training {
                let mut seen = HashSet::new();
                for s in &doc.sentences {
                    for w in s.tokens.windows(3) {
                        seen.insert([w[0], w[1], w[2]]);
                    }
                }
                for t in seen {
                    *df.entry(t).or_default() += 1;
                }
            }
            frequent_trigrams = df
                .into_iter()
                .filter(|&(_, n)| n >= config.min_trigram_df)
                .map(|(t, _)| t)
                .collect();
        }
        Self {
            config,
            frequent_trigrams,
        }
    }

    pub fn num_frequent_trigrams(&self) -> usize {
        self.frequent_trigrams.len()
    }
}

/// Sparse binary features; presence of a key means value 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector(pub BTreeSet<String>);

impl FeatureVector {
    pub fn insert(&mut self, key: String) {
        self.0.insert(key);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn conjunction_key(token: &str, kind: ModelKind, topic: usize, bucket: usize) -> String {
    format!("{token}&{}&t{topic}&b{bucket}", kind.feature_tag())
}

/// Topic evidence attached to one document's sentences.
pub struct TopicEvidence<'a, F> {
    pub kind: ModelKind,
    pub profiles: &'a [SentenceTopicProfile<F>],
    pub bucketizer: &'a Bucketizer<F>,
    pub top_k: usize,
}

/// N-gram features over each sentence plus, when topic evidence is given,
/// `<token>&<model>&t<topic>&b<bucket>` for every token of a sentence and each
/// of that sentence's top topics with nonzero probability.
pub fn make_features<F: Scalar>(
    corpus: &Corpus,
    doc: &Document,
    ngrams: &NgramVocab,
    topics: Option<&TopicEvidence<'_, F>>,
) -> Result<FeatureVector> {
    let vocab = corpus.vocabulary();
    let term = |id: u32| vocab.term(id).unwrap_or("<unk>");
    let mut fv = FeatureVector::default();
    for s in &doc.sentences {
        for &w in &s.tokens {
            fv.insert(term(w).to_owned());
        }
        if ngrams.config.bigrams {
            for p in s.tokens.windows(2) {
                fv.insert(format!("{}_{}", term(p[0]), term(p[1])));
            }
        }
        if ngrams.config.trigrams {
            for t in s.tokens.windows(3) {
                if ngrams.frequent_trigrams.contains(&[t[0], t[1], t[2]]) {
                    fv.insert(format!("{}_{}_{}", term(t[0]), term(t[1]), term(t[2])));
                }
            }
        }
    }

    let Some(ev) = topics else {
        return Ok(fv);
    };
    if ev.profiles.len() != doc.sentences.len() {
        return Err(Error::LengthMismatch {
            left: ev.profiles.len(),
            right: doc.sentences.len(),
        });
    }
    for (s, profile) in doc.sentences.iter().zip(ev.profiles) {
        let mut ranked: Vec<(usize, F)> = profile
            .probs
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > F::zero())
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("not NaN").then(a.0.cmp(&b.0)));
        ranked.truncate(ev.top_k);
        for (z, p) in ranked {
            let b = ev.bucketizer.bucket(p);
            for &w in &s.tokens {
                fv.insert(conjunction_key(term(w), ev.kind, z, b));
            }
        }
    }
    Ok(fv)
}

/// Dense integer ids for feature names, assigned in sorted name order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureIndex {
    names: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, u32>,
}

impl FeatureIndex {
    pub fn build<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Self {
        let names: BTreeSet<&str> = vectors.into_iter().flat_map(|v| v.iter()).collect();
        let names: Vec<String> = names.into_iter().map(str::to_owned).collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Self { names, ids }
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// `label idx:1 idx:1 ...` with ascending ids; unknown features are skipped.
    pub fn sparse_line(&self, label: &str, fv: &FeatureVector) -> String {
        let mut ids: Vec<u32> = fv.iter().filter_map(|f| self.id(f)).collect();
        ids.sort_unstable();
        let mut line = label.to_owned();
        for id in ids {
            line.push_str(&format!(" {id}:1"));
        }
        line
    }
}

pub fn write_profiles_jsonl<F: Scalar, W: Write>(
    out: &mut W,
    profiles: &[Vec<SentenceTopicProfile<F>>],
) -> Result<()> {
    for p in profiles.iter().flatten() {
        serde_json::to_writer(&mut *out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
