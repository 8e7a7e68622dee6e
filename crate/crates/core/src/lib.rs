//! Multi-grain LDA and LDA topic models trained with collapsed Gibbs
//! sampling, with the downstream pieces needed to rate review aspects:
//! per-sentence topic profiles, bucketed conjunction features and a PRanking
//! ordinal perceptron.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool uses.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lda;
pub mod mglda;
pub mod persist;
pub mod ranker;
pub mod scalar;
pub mod synth;

pub use corpus::{build_corpus, Corpus, Document, RawDocument, Sentence, Vocabulary};
pub use error::{Error, Result};
pub use mglda::{Assignment, Granularity, MgldaState};
pub use scalar::Scalar;

pub type Hyperparams = mglda::Hyperparams<f64>;
pub type Mglda = mglda::MgldaState<f64>;
pub type TopicModel = mglda::TopicModel<f64>;
pub type Lda = lda::LdaState<f64>;
pub type LdaParams = lda::LdaParams<f64>;
pub type Ranker = ranker::RankerModel<f64>;
pub type SentenceTopicProfile = features::SentenceTopicProfile<f64>;
pub type Bucketizer = features::Bucketizer<f64>;
