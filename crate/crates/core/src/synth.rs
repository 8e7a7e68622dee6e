//! Synthetic corpora: forward samples of the multi-grain generative process
//! with known topics, and rated reviews with planted aspect topics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::ranker::RatedInstance;

/// The six hotel aspects used by the rated-review generator.
pub const HOTEL_ASPECTS: [&str; 6] = [
    "check-in",
    "service",
    "value",
    "location",
    "rooms",
    "cleanliness",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgldaSynthConfig {
    pub documents: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub vocab_size: usize,
    pub k_global: usize,
    pub k_local: usize,
    pub window: usize,
    pub alpha_gl: f64,
    pub alpha_loc: f64,
    pub alpha_mix_gl: f64,
    pub alpha_mix_loc: f64,
    pub gamma: f64,
    /// Share of each topic's mass placed on its own block of anchor words.
    pub peak: f64,
    /// Dirichlet concentration of the non-anchor background mass.
    pub background: f64,
}

impl Default for MgldaSynthConfig {
    fn default() -> Self {
        Self {
            documents: 500,
            min_sentences: 6,
            max_sentences: 12,
            min_words: 4,
            max_words: 10,
            vocab_size: 40,
            k_global: 4,
            k_local: 3,
            window: 3,
            alpha_gl: 0.1,
            alpha_loc: 0.1,
            alpha_mix_gl: 1.0,
            alpha_mix_loc: 1.0,
            gamma: 1.0,
            peak: 0.9,
            background: 1.0,
        }
    }
}

impl MgldaSynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("synthetic config: {m}")));
        if self.documents == 0 || self.vocab_size == 0 {
            return bad("documents and vocab_size must be positive");
        }
        if self.k_global == 0 || self.k_local == 0 || self.window == 0 {
            return bad("k_global, k_local and window must be positive");
        }
        if self.vocab_size < self.k_global + self.k_local {
            return bad("vocab_size must be at least k_global + k_local");
        }
        if self.min_sentences == 0 || self.min_sentences > self.max_sentences {
            return bad("sentence range must be nonempty and start at 1 or more");
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("word range must be nonempty and start at 1 or more");
        }
        if !(0.0..=1.0).contains(&self.peak) {
            return bad("peak must lie in [0, 1]");
        }
        let positive = [
            self.alpha_gl,
            self.alpha_loc,
            self.alpha_mix_gl,
            self.alpha_mix_loc,
            self.gamma,
            self.background,
        ];
        if positive.iter().any(|&x| x.is_nan() || x <= 0.0 || x.is_infinite()) {
            return bad("priors must be positive");
        }
        Ok(())
    }
}

/// Word distributions that generated a synthetic corpus, keyed by term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub vocabulary: Vec<String>,
    pub phi_global: Vec<Vec<f64>>,
    pub phi_local: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub documents: Vec<RawDocument>,
    pub truth: GroundTruth,
}

pub fn term(w: usize) -> String {
    format!("w{w}")
}

fn sample_dirichlet<R: Rng>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        // Every gamma draw underflowed; the limit is a point mass.
        let i = rng.random_range(0..v.len());
        v.iter_mut().enumerate().for_each(|(j, x)| *x = f64::from(i == j));
    }
    v
}

fn sample_symmetric<R: Rng>(rng: &mut R, alpha: f64, k: usize) -> Vec<f64> {
    sample_dirichlet(rng, &vec![alpha; k])
}

fn categorical<R: Rng>(rng: &mut R, p: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, &x) in p.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

/// Topic rows: each topic puts `peak` on its own contiguous block of words and
/// spreads the rest with a Dirichlet background draw.
fn peaked_topics<R: Rng>(rng: &mut R, cfg: &MgldaSynthConfig) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let total = cfg.k_global + cfg.k_local;
    let block = cfg.vocab_size / total;
    let rows: Vec<Vec<f64>> = (0..total)
        .map(|t| {
            let bg = sample_symmetric(rng, cfg.background, cfg.vocab_size);
            (0..cfg.vocab_size)
                .map(|w| {
                    let anchor = if w / block == t && w < block * total {
                        cfg.peak / block as f64
                    } else {
                        0.0
                    };
                    anchor + (1.0 - cfg.peak) * bg[w]
                })
                .collect()
        })
        .collect();
    let local = rows[cfg.k_global..].to_vec();
    let mut global = rows;
    global.truncate(cfg.k_global);
    (global, local)
}

/// Samples a corpus forward from the multi-grain generative process.
///
/// Sentence `s` chooses among windows `s..s + T`; each window owns a local
/// topic mixture and a global-vs-local preference.
pub fn generate_mglda(cfg: &MgldaSynthConfig, seed: u64) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (phi_global, phi_local) = peaked_topics(&mut rng, cfg);
    let mix = Beta::new(cfg.alpha_mix_gl, cfg.alpha_mix_loc)
        .map_err(|e| Error::Invalid(e.to_string()))?;

    let mut documents = Vec::with_capacity(cfg.documents);
    for d in 0..cfg.documents {
        let num_sentences = rng.random_range(cfg.min_sentences..=cfg.max_sentences);
        let num_windows = num_sentences + cfg.window - 1;
        let theta_gl = sample_symmetric(&mut rng, cfg.alpha_gl, cfg.k_global);
        let theta_loc: Vec<Vec<f64>> = (0..num_windows)
            .map(|_| sample_symmetric(&mut rng, cfg.alpha_loc, cfg.k_local))
            .collect();
        let pi: Vec<f64> = (0..num_windows).map(|_| mix.sample(&mut rng)).collect();

        let mut sentences = Vec::with_capacity(num_sentences);
        for s in 0..num_sentences {
            let psi = sample_symmetric(&mut rng, cfg.gamma, cfg.window);
            let len = rng.random_range(cfg.min_words..=cfg.max_words);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let v = s + categorical(&mut rng, &psi);
                    let phi = if rng.random::<f64>() < pi[v] {
                        &phi_global[categorical(&mut rng, &theta_gl)]
                    } else {
                        &phi_local[categorical(&mut rng, &theta_loc[v])]
                    };
                    term(categorical(&mut rng, phi))
                })
                .collect();
            sentences.push(format!("{}.", words.join(" ")));
        }
        documents.push(RawDocument {
            id: format!("doc{d:05}"),
            text: sentences.join(" "),
            ratings: None,
        });
    }
    Ok(SyntheticCorpus {
        documents,
        truth: GroundTruth {
            vocabulary: (0..cfg.vocab_size).map(term).collect(),
            phi_global,
            phi_local,
        },
    })
}

/// Rated reviews where every aspect is discussed in its own sentence made of
/// aspect words plus one sentiment word whose strength tracks the rating.
///
/// The same sentiment words serve every aspect, so a bag of words cannot tell
/// which aspect a sentiment belongs to; the aspect vocabulary can.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReviewSynthConfig {
    pub documents: usize,
    pub aspects: Vec<String>,
    pub levels: u32,
    pub aspect_vocab: usize,
    pub aspect_words_per_sentence: usize,
    pub sentiment_vocab_per_level: usize,
    pub themes: usize,
    pub theme_vocab: usize,
    pub filler_sentences: usize,
    pub filler_words: usize,
    /// Probability that a sentiment word is one level off the true rating.
    pub noise: f64,
}

impl Default for ReviewSynthConfig {
    fn default() -> Self {
        Self {
            documents: 600,
            aspects: HOTEL_ASPECTS.iter().map(|s| s.to_string()).collect(),
            levels: 5,
            aspect_vocab: 8,
            aspect_words_per_sentence: 3,
            sentiment_vocab_per_level: 3,
            themes: 4,
            theme_vocab: 10,
            filler_sentences: 2,
            filler_words: 4,
            noise: 0.2,
        }
    }
}

pub fn generate_reviews(cfg: &ReviewSynthConfig, seed: u64) -> Result<Vec<RawDocument>> {
    if cfg.documents == 0 || cfg.aspects.is_empty() || cfg.levels < 2 {
        return Err(Error::Invalid(
            "review config needs documents, aspects and at least two levels".into(),
        ));
    }
    if cfg.aspect_vocab == 0 || cfg.sentiment_vocab_per_level == 0 || cfg.themes == 0 || cfg.theme_vocab == 0 {
        return Err(Error::Invalid("review vocabularies must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(cfg.documents);
    for d in 0..cfg.documents {
        let theme = rng.random_range(0..cfg.themes);
        let mut ratings = BTreeMap::new();
        let mut sentences = Vec::new();
        for (a, name) in cfg.aspects.iter().enumerate() {
            let rating = rng.random_range(1..=cfg.levels);
            ratings.insert(name.clone(), rating);
            let mut level = rating as i64;
            if rng.random::<f64>() < cfg.noise {
                level += if rng.random_bool(0.5) { 1 } else { -1 };
            }
            let level = level.clamp(1, cfg.levels as i64);
            let mut words: Vec<String> = (0..cfg.aspect_words_per_sentence)
                .map(|_| format!("a{a}w{}", rng.random_range(0..cfg.aspect_vocab)))
                .collect();
            let pos = rng.random_range(0..=words.len());
            words.insert(
                pos,
                format!("s{level}w{}", rng.random_range(0..cfg.sentiment_vocab_per_level)),
            );
            sentences.push(words);
        }
        for _ in 0..cfg.filler_sentences {
            sentences.push(
                (0..cfg.filler_words)
                    .map(|_| format!("g{theme}w{}", rng.random_range(0..cfg.theme_vocab)))
                    .collect(),
            );
        }
        sentences.shuffle(&mut rng);
        let text = sentences
            .iter()
            .map(|s| format!("{}.", s.join(" ")))
            .collect::<Vec<_>>()
            .join(" ");
        documents.push(RawDocument {
            id: format!("review{d:05}"),
            text,
            ratings: Some(ratings),
        });
    }
    Ok(documents)
}

/// Linearly separable ordinal data over binary features `f0..f{n-1}`.
///
/// Hidden integer weights give every instance an integer score; rating
/// boundaries sit at half-integers chosen from score quantiles, so every
/// instance is separated from every boundary by at least 1/2.
pub fn generate_separable_ordinal(
    instances: usize,
    features: usize,
    levels: u32,
    seed: u64,
) -> Result<Vec<RatedInstance>> {
    if instances == 0 || features == 0 || levels < 2 {
        return Err(Error::Invalid("need instances, features and two levels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<i64> = (0..features).map(|_| rng.random_range(-3..=3)).collect();
    let rows: Vec<(Vec<usize>, i64)> = (0..instances)
        .map(|_| {
            let active: Vec<usize> = (0..features).filter(|_| rng.random_bool(0.5)).collect();
            let score = active.iter().map(|&j| weights[j]).sum();
            (active, score)
        })
        .collect();
    let mut scores: Vec<i64> = rows.iter().map(|r| r.1).collect();
    scores.sort_unstable();
    let cuts: Vec<f64> = (1..levels)
        .map(|j| scores[(scores.len() - 1) * j as usize / levels as usize] as f64 + 0.5)
        .collect();
    Ok(rows
        .into_iter()
        .map(|(active, score)| {
            let rating = cuts.iter().filter(|&&c| (score as f64) > c).count() as u32 + 1;
            RatedInstance {
                features: FeatureVector(active.iter().map(|j| format!("f{j}")).collect()),
                ratings: vec![rating],
            }
        })
        .collect())
}
