//! Command-line flags and the optional TOML config file they overlay.
//!
//! A flag given on the command line takes precedence over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "mglda",
    version,
    about = "Multi-grain topic models for reviews and aspect rating with PRanking"
)]
pub struct Cli {
    /// TOML file with one table per subcommand (`[train]`, `[rank]`, ...).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tokenize and sentence-split a JSON-lines file into a corpus file.
    Ingest(IngestArgs),
    /// Run the Gibbs sampler and write the model plus a log-joint trace.
    Train(TrainArgs),
    /// Print the most probable words of every topic.
    Topics(TopicsArgs),
    /// Train PRanking rankers and report ranking loss on held-out reviews.
    Rank(RankArgs),
    /// Generate a synthetic corpus together with its ground truth.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Mglda,
    Lda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Mglda,
    Reviews,
}

macro_rules! overlay {
    ($ty:ident { $($field:ident),* $(,)? } $(bools { $($flag:ident),* })?) => {
        impl $ty {
            /// Fills every option missing on the command line from `file`.
            pub fn overlay(&mut self, file: $ty) {
                $( if self.$field.is_none() { self.$field = file.$field; } )*
                $( $( self.$flag |= file.$flag; )* )?
            }
        }
    };
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct IngestArgs {
    /// JSON-lines input, one `{"id", "text", "ratings"?}` object per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Stopword list, one term per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of ordinal rating levels.
    #[arg(long)]
    pub levels: Option<u32>,
}
overlay!(IngestArgs { input, stopwords, out, levels });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log-joint trace CSV; defaults to the model path with `.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the topic report here.
    #[arg(long)]
    pub topics_out: Option<PathBuf>,
    /// Words per topic in the topic report.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Global topics (the topic count K for LDA).
    #[arg(long)]
    pub k_global: Option<usize>,
    #[arg(long)]
    pub k_local: Option<usize>,
    /// Sliding window length in sentences.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Global topic prior (alpha for LDA).
    #[arg(long)]
    pub alpha_gl: Option<f64>,
    #[arg(long)]
    pub alpha_loc: Option<f64>,
    #[arg(long)]
    pub alpha_mix_gl: Option<f64>,
    #[arg(long)]
    pub alpha_mix_loc: Option<f64>,
    /// Global word prior (beta for LDA).
    #[arg(long)]
    pub beta_gl: Option<f64>,
    #[arg(long)]
    pub beta_loc: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent chains to run; the best final log joint is kept.
    #[arg(long)]
    pub chains: Option<usize>,
}
overlay!(TrainArgs {
    corpus, out, trace, topics_out, top_n, model, k_global, k_local, window, iterations,
    alpha_gl, alpha_loc, alpha_mix_gl, alpha_mix_loc, beta_gl, beta_loc, gamma, seed, chains,
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TopicsArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Words per topic.
    #[arg(short = 'n', long)]
    pub top_n: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(TopicsArgs { model, top_n, out });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RankArgs {
    /// Corpus file whose documents all carry ratings.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model file trained on the same corpus.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Add a row that uses topic conjunction features from `--model`.
    #[arg(long)]
    pub topic_features: bool,
    /// Resampling sweeps averaged into each sentence profile.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Topics per sentence turned into conjunction features.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Longest n-gram used as a feature (1 to 3).
    #[arg(long)]
    pub ngrams: Option<usize>,
    /// Share of documents used for training.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Loss report TSV; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Ranker weights and boundaries of the last trained method.
    #[arg(long)]
    pub ranker_out: Option<PathBuf>,
    /// Sentence topic profiles as JSON lines.
    #[arg(long)]
    pub profiles_out: Option<PathBuf>,
    /// Sparse binary feature vectors, one `ratings idx:1 ...` line per document.
    #[arg(long)]
    pub features_out: Option<PathBuf>,
}
overlay!(RankArgs {
    corpus, model, samples, buckets, top_k, epochs, seed, ngrams, train_fraction,
    report, ranker_out, profiles_out, features_out,
} bools { topic_features });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Option<SynthKind>,
    /// JSON-lines corpus to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth JSON to write.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub documents: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub k_global: Option<usize>,
    #[arg(long)]
    pub k_local: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub alpha_gl: Option<f64>,
    #[arg(long)]
    pub alpha_loc: Option<f64>,
    #[arg(long)]
    pub alpha_mix_gl: Option<f64>,
    #[arg(long)]
    pub alpha_mix_loc: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Share of each topic's mass on its anchor words.
    #[arg(long)]
    pub peak: Option<f64>,
    /// Rating levels of synthetic reviews.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Probability that a review's sentiment word is one level off.
    #[arg(long)]
    pub noise: Option<f64>,
}
overlay!(SynthArgs {
    kind, out, truth, seed, documents, vocab_size, k_global, k_local, window,
    alpha_gl, alpha_loc, alpha_mix_gl, alpha_mix_loc, gamma, peak, levels, noise,
});

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub ingest: IngestArgs,
    pub train: TrainArgs,
    pub topics: TopicsArgs,
    pub rank: RankArgs,
    pub synth: SynthArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

impl Command {
    pub fn overlay(&mut self, file: ConfigFile) {
        match self {
            Command::Ingest(a) => a.overlay(file.ingest),
            Command::Train(a) => a.overlay(file.train),
            Command::Topics(a) => a.overlay(file.topics),
            Command::Rank(a) => a.overlay(file.rank),
            Command::Synth(a) => a.overlay(file.synth),
        }
    }
}

pub(crate) fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required option {flag}")))
}
