//! Feature extraction and ranker evaluation shared by `rank` and `features`.

use std::sync::Arc;

use mglda::features::{
    make_features, profile_corpus, Bucketizer, FeatureVector, ModelKind, NgramConfig, NgramVocab,
    SentenceTopicProfile, TopicEvidence, DEFAULT_BUCKETS, DEFAULT_SAMPLES, DEFAULT_TOP_K,
};
use mglda::persist::{ModelFile, TrainedModel};
use mglda::ranker::{baseline_rate, LossRow, RankerModel, RatedInstance, DEFAULT_EPOCHS};
use mglda::{Corpus, Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Clone, Debug)]
pub struct RankSettings {
    pub samples: usize,
    pub buckets: usize,
    pub top_k: usize,
    pub epochs: usize,
    pub seed: u64,
    pub ngrams: NgramConfig,
    pub train_fraction: f64,
}

impl Default for RankSettings {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            buckets: DEFAULT_BUCKETS,
            top_k: DEFAULT_TOP_K,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            ngrams: NgramConfig::unigrams_only(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// Per-sentence profiles for the whole corpus from a trained model.
pub struct TopicProfiles {
    pub kind: ModelKind,
    pub profiles: Vec<Vec<SentenceTopicProfile<f64>>>,
}

impl TopicProfiles {
    pub fn compute(model: &ModelFile<f64>, corpus: Arc<Corpus>, samples: usize, seed: u64) -> Result<Self> {
        let profiles = match &model.model {
            TrainedModel::Mglda { .. } => {
                let mut state = model.restore_mglda(corpus)?;
                profile_corpus(&mut state, samples, seed)?
            }
            TrainedModel::Lda { .. } => {
                let mut state = model.restore_lda(corpus)?;
                profile_corpus(&mut state, samples, seed)?
            }
        };
        Ok(Self {
            kind: model.kind(),
            profiles,
        })
    }
}

/// Shuffled document indices cut into a training and a test part.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Invalid("train fraction must lie strictly between 0 and 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let cut = ((n as f64) * train_fraction).round() as usize;
    let cut = cut.clamp(1.min(n), n.saturating_sub(1));
    let test = order.split_off(cut);
    if order.is_empty() || test.is_empty() {
        return Err(Error::Invalid("corpus too small to split into training and test parts".into()));
    }
    Ok((order, test))
}

/// Ratings of every document in `aspects` order; any gap is an error.
pub fn corpus_ratings(corpus: &Corpus) -> Result<(Vec<String>, Vec<Vec<u32>>)> {
    let aspects = corpus.aspects();
    if aspects.is_empty() {
        return Err(Error::Invalid("corpus has no aspect ratings".into()));
    }
    let ratings = corpus
        .documents()
        .iter()
        .map(|doc| {
            let map = doc
                .ratings
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("document `{}` has no ratings", doc.id)))?;
            aspects
                .iter()
                .map(|a| {
                    map.get(a).copied().ok_or_else(|| {
                        Error::Invalid(format!("document `{}` has no `{a}` rating", doc.id))
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<u32>>>>()?;
    Ok((aspects, ratings))
}

/// Feature vectors for every document. Buckets are fitted on the `fit_on`
/// documents only.
pub fn corpus_features(
    corpus: &Corpus,
    fit_on: &[usize],
    ngrams: &NgramConfig,
    topics: Option<(&TopicProfiles, usize, usize)>,
) -> Result<Vec<FeatureVector>> {
    let docs = corpus.documents();
    let vocab = NgramVocab::fit(ngrams.clone(), fit_on.iter().map(|&d| &docs[d]));
    let bucketizer = match topics {
        Some((tp, buckets, _)) => Some(Bucketizer::fit_profiles(
            fit_on.iter().flat_map(|&d| tp.profiles[d].iter()),
            buckets,
        )?),
        None => None,
    };
    docs.iter()
        .enumerate()
        .map(|(d, doc)| {
            let evidence = match (topics, &bucketizer) {
                (Some((tp, _, top_k)), Some(b)) => Some(TopicEvidence {
                    kind: tp.kind,
                    profiles: &tp.profiles[d],
                    bucketizer: b,
                    top_k,
                }),
                _ => None,
            };
            make_features(corpus, doc, &vocab, evidence.as_ref())
        })
        .collect()
}

pub struct RankOutcome {
    pub aspects: Vec<String>,
    pub rows: Vec<LossRow>,
    /// The ranker of the last row that was trained.
    pub ranker: RankerModel<f64>,
}

fn instances(features: &[FeatureVector], ratings: &[Vec<u32>], idx: &[usize]) -> Vec<RatedInstance> {
    idx.iter()
        .map(|&d| RatedInstance {
            features: features[d].clone(),
            ratings: ratings[d].clone(),
        })
        .collect()
}

/// Baseline and PRank rows, plus a PRank row with topic conjunctions when
/// profiles are supplied.
pub fn evaluate_rankers(
    corpus: &Corpus,
    topics: Option<&TopicProfiles>,
    settings: &RankSettings,
) -> Result<RankOutcome> {
    let (aspects, ratings) = corpus_ratings(corpus)?;
    let levels = corpus.rating_levels();
    let (train, test) = split_indices(corpus.len(), settings.train_fraction, settings.seed)?;

    let plain = corpus_features(corpus, &train, &settings.ngrams, None)?;
    let test_plain = instances(&plain, &ratings, &test);
    let mut rows = vec![LossRow::evaluate("baseline", aspects.len(), &test_plain, |_, x| {
        baseline_rate(x)
    })?];
    let mut ranker = RankerModel::train(
        &aspects,
        levels,
        &instances(&plain, &ratings, &train),
        settings.epochs,
        settings.seed,
    )?;
    rows.push(LossRow::evaluate("prank", aspects.len(), &test_plain, |a, x| {
        ranker.predict(a, x)
    })?);

    if let Some(tp) = topics {
        let rich = corpus_features(
            corpus,
            &train,
            &settings.ngrams,
            Some((tp, settings.buckets, settings.top_k)),
        )?;
        ranker = RankerModel::train(
            &aspects,
            levels,
            &instances(&rich, &ratings, &train),
            settings.epochs,
            settings.seed,
        )?;
        let test_rich = instances(&rich, &ratings, &test);
        let name = format!("prank+{}", tp.kind);
        rows.push(LossRow::evaluate(&name, aspects.len(), &test_rich, |a, x| {
            ranker.predict(a, x)
        })?);
    }
    Ok(RankOutcome {
        aspects,
        rows,
        ranker,
    })
}
