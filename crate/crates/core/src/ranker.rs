//! PRanking: an online perceptron for ordinal regression, one weight vector
//! and `k - 1` ordered boundaries per aspect, plus ranking-loss evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Scalar;

pub const DEFAULT_EPOCHS: usize = 10;

/// Rating given by the majority baseline; 5 is the most common rating in
/// hotel review data.
pub const MAJORITY_RATING: u32 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AspectRanker<F> {
    pub name: String,
    pub weights: BTreeMap<String, F>,
    /// `b_1 <= ... <= b_{k-1}`; `b_k` is implicitly `+inf`.
    pub boundaries: Vec<F>,
}

impl<F: Scalar> AspectRanker<F> {
    pub fn score(&self, x: &FeatureVector) -> F {
        x.iter()
            .filter_map(|f| self.weights.get(f))
            .fold(F::zero(), |acc, &w| acc + w)
    }

    /// Smallest `j` with `score < b_j`, else `k`.
    pub fn predict(&self, x: &FeatureVector) -> u32 {
        self.rank_of_score(self.score(x))
    }

    pub fn rank_of_score(&self, score: F) -> u32 {
        self.boundaries
            .iter()
            .position(|&b| score < b)
            .map_or(self.boundaries.len() as u32 + 1, |j| j as u32 + 1)
    }

    pub fn boundaries_ordered(&self) -> bool {
        self.boundaries.windows(2).all(|w| w[0] <= w[1])
    }

    /// One PRanking step. Returns whether the model changed, which happens
    /// exactly when the prediction was wrong.
    pub fn update(&mut self, x: &FeatureVector, y: u32) -> Result<bool> {
        let k = self.boundaries.len() as u32 + 1;
        if y < 1 || y > k {
            return Err(Error::RatingOutOfRange { rating: y, k });
        }
        let score = self.score(x);
        if self.rank_of_score(score) == y {
            return Ok(false);
        }
        let mut step = F::zero();
        for (r, b) in self.boundaries.iter_mut().enumerate() {
            let side = if y > r as u32 + 1 { F::one() } else { -F::one() };
            // A score sitting exactly on the boundary counts as a violation.
            if (score - *b) * side <= F::zero() {
                step = step + side;
                *b = *b - side;
            }
        }
        if step != F::zero() {
            for f in x.iter() {
                let w = self.weights.entry(f.to_owned()).or_insert_with(F::zero);
                *w = *w + step;
            }
        }
        debug_assert!(self.boundaries_ordered());
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RankerModel<F> {
    /// Number of rating levels.
    pub levels: u32,
    pub aspects: Vec<AspectRanker<F>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatedInstance {
    pub features: FeatureVector,
    /// One rating per aspect, in the model's aspect order.
    pub ratings: Vec<u32>,
}

impl<F: Scalar> RankerModel<F> {
    /// Zero weights and zero boundaries.
    pub fn new(aspects: &[String], levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Invalid("at least two rating levels are needed".into()));
        }
        Ok(Self {
            levels,
            aspects: aspects
                .iter()
                .map(|name| AspectRanker {
                    name: name.clone(),
                    weights: BTreeMap::new(),
                    boundaries: vec![F::zero(); levels as usize - 1],
                })
                .collect(),
        })
    }

    pub fn predict(&self, aspect: usize, x: &FeatureVector) -> u32 {
        self.aspects[aspect].predict(x)
    }

    pub fn predict_all(&self, x: &FeatureVector) -> Vec<u32> {
        self.aspects.iter().map(|a| a.predict(x)).collect()
    }

    pub fn prank_update(&mut self, aspect: usize, x: &FeatureVector, y: u32) -> Result<bool> {
        let len = self.aspects.len();
        self.aspects
            .get_mut(aspect)
            .ok_or_else(|| Error::Invalid(format!("aspect {aspect} out of range ({len} aspects)")))?
            .update(x, y)
    }

    /// Online training with a freshly shuffled order each epoch. Aspects are
    /// independent and train on their own threads, each with its own random
    /// stream derived from `seed`.
    pub fn train(
        aspects: &[String],
        levels: u32,
        instances: &[RatedInstance],
        epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::new(aspects, levels)?;
        if instances.is_empty() {
            return Err(Error::Invalid("no training instances".into()));
        }
        for inst in instances {
            if inst.ratings.len() != aspects.len() {
                return Err(Error::LengthMismatch {
                    left: inst.ratings.len(),
                    right: aspects.len(),
                });
            }
            if let Some(&r) = inst.ratings.iter().find(|&&r| r < 1 || r > levels) {
                return Err(Error::RatingOutOfRange { rating: r, k: levels });
            }
        }
        std::thread::scope(|scope| {
            for (i, aspect) in model.aspects.iter_mut().enumerate() {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    let mut order: Vec<usize> = (0..instances.len()).collect();
                    for _ in 0..epochs {
                        order.shuffle(&mut rng);
                        for &n in &order {
                            let inst = &instances[n];
                            aspect
                                .update(&inst.features, inst.ratings[i])
                                .expect("ratings validated above");
                        }
                    }
                });
            }
        });
        Ok(model)
    }
}

/// Mean absolute difference between true and predicted ratings.
pub fn ranking_loss(actual: &[u32], predicted: &[u32]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Invalid("ranking loss needs at least one rating".into()));
    }
    let total: u64 = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| u64::from(a.abs_diff(p)))
        .sum();
    Ok(total as f64 / actual.len() as f64)
}

/// Majority baseline: every aspect is rated 5 regardless of the text.
pub fn baseline_rate(_x: &FeatureVector) -> u32 {
    MAJORITY_RATING
}

/// Per-aspect losses of one method plus their mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub method: String,
    pub per_aspect: Vec<f64>,
    pub overall: f64,
}

impl LossRow {
    /// Evaluates `predict` on every instance, aspect by aspect.
    pub fn evaluate(
        method: &str,
        aspects: usize,
        instances: &[RatedInstance],
        mut predict: impl FnMut(usize, &FeatureVector) -> u32,
    ) -> Result<Self> {
        let mut per_aspect = Vec::with_capacity(aspects);
        for a in 0..aspects {
            let actual: Vec<u32> = instances.iter().map(|i| i.ratings[a]).collect();
            let predicted: Vec<u32> = instances.iter().map(|i| predict(a, &i.features)).collect();
            per_aspect.push(ranking_loss(&actual, &predicted)?);
        }
        let overall = per_aspect.iter().sum::<f64>() / per_aspect.len().max(1) as f64;
        Ok(Self {
            method: method.to_owned(),
            per_aspect,
            overall,
        })
    }
}

/// Tab-separated table: a header of aspect names and `overall`, one row per
/// method.
pub fn loss_report_tsv(aspects: &[String], rows: &[LossRow]) -> String {
    let mut out = String::from("method");
    for a in aspects {
        out.push('\t');
        out.push_str(a);
    }
    out.push_str("\toverall\n");
    for row in rows {
        out.push_str(&row.method);
        for v in &row.per_aspect {
            let _ = write!(out, "\t{v:.4}");
        }
        let _ = writeln!(out, "\t{:.4}", row.overall);
    }
    out
}
