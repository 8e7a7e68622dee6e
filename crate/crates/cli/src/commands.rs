use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mglda::corpus::{build_corpus_with_levels, read_jsonl, read_stopwords, DEFAULT_RATING_LEVELS};
use mglda::features::{write_profiles_jsonl, FeatureIndex, NgramConfig};
use mglda::lda::LdaParams;
use mglda::mglda::{Hyperparams, DEFAULT_ITERATIONS};
use mglda::persist::{topic_report, CorpusFile, ModelFile, DEFAULT_TOP_WORDS, FORMAT_VERSION};
use mglda::ranker::loss_report_tsv;
use mglda::synth::{generate_mglda, generate_reviews, MgldaSynthConfig, ReviewSynthConfig};
use mglda::{Corpus, Error, Lda, Mglda};

use crate::args::{require, IngestArgs, ModelArg, RankArgs, SynthArgs, SynthKind, TopicsArgs, TrainArgs};
use crate::artifacts::{report_header, RankerFile, SynthTruth, SynthTruthFile};
use crate::error::{CliError, CliResult};
use crate::pipeline::{corpus_features, corpus_ratings, evaluate_rankers, split_indices, RankSettings, TopicProfiles};

pub const DEFAULT_SEED: u64 = 1;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(Error::Invalid(format!("cannot read {}: {e}", path.display()))))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(Error::Invalid(format!("cannot open {}: {e}", path.display()))))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .map_err(|e| CliError::Data(Error::Invalid(format!("cannot write {}: {e}", path.display()))))
}

pub fn load_corpus(path: &Path) -> CliResult<Corpus> {
    Ok(CorpusFile::from_json(&read_text(path)?)?)
}

pub fn load_model(path: &Path) -> CliResult<ModelFile<f64>> {
    Ok(ModelFile::from_json(&read_text(path)?)?)
}

pub fn cmd_ingest(args: IngestArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let input = require(args.input, "--input")?;
    let out = require(args.out, "--out")?;
    let levels = args.levels.unwrap_or(DEFAULT_RATING_LEVELS);
    if levels < 2 {
        return Err(CliError::usage("--levels must be at least 2"));
    }
    let docs = read_jsonl(open(&input)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Invalid(format!(
            "{}: line {line}: {message}",
            input.display()
        )),
        other => other,
    })?;
    let stopwords = match &args.stopwords {
        Some(p) => read_stopwords(open(p)?)?,
        None => Default::default(),
    };
    let (corpus, report) = build_corpus_with_levels(docs, &stopwords, levels)?;
    write_text(&out, &CorpusFile::new(corpus).to_json()?)?;
    writeln!(stdout, "{report}")?;
    Ok(())
}

/// Runs `chains` independent chains concurrently, chain `c` seeded with
/// `seed + c`, and returns the results in chain order.
fn run_chains<T: Send>(
    chains: usize,
    seed: u64,
    run: impl Fn(u64) -> mglda::Result<T> + Sync,
) -> mglda::Result<Vec<T>> {
    let run = &run;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|c| scope.spawn(move || run(seed.wrapping_add(c))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// Index of the largest final log joint; ties keep the earliest chain.
fn best_chain(finals: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in finals.iter().enumerate().skip(1) {
        if v > finals[best] {
            best = i;
        }
    }
    best
}

fn trace_csv(trace: &[f64]) -> String {
    let mut out = report_header();
    out.push_str("iteration,log_joint\n");
    for (i, lj) in trace.iter().enumerate() {
        out.push_str(&format!("{},{lj}\n", i + 1));
    }
    out
}

fn default_trace_path(model: &Path) -> PathBuf {
    let mut name = model.file_stem().unwrap_or_default().to_os_string();
    name.push(".trace.csv");
    model.with_file_name(name)
}

pub fn cmd_train(args: TrainArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let corpus = Arc::new(load_corpus(&require(args.corpus, "--corpus")?)?);
    let out = require(args.out, "--out")?;
    let iterations = args.iterations.unwrap_or(DEFAULT_ITERATIONS);
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let chains = args.chains.unwrap_or(1);
    if chains == 0 {
        return Err(CliError::usage("--chains must be at least 1"));
    }
    let top_n = args.top_n.unwrap_or(DEFAULT_TOP_WORDS);

    let (file, trace) = match args.model.unwrap_or(ModelArg::Mglda) {
        ModelArg::Mglda => {
            let d = Hyperparams::<f64>::default();
            let hyper = Hyperparams {
                k_global: args.k_global.unwrap_or(d.k_global),
                k_local: args.k_local.unwrap_or(d.k_local),
                window: args.window.unwrap_or(d.window),
                alpha_gl: args.alpha_gl.unwrap_or(d.alpha_gl),
                alpha_loc: args.alpha_loc.unwrap_or(d.alpha_loc),
                alpha_mix_gl: args.alpha_mix_gl.unwrap_or(d.alpha_mix_gl),
                alpha_mix_loc: args.alpha_mix_loc.unwrap_or(d.alpha_mix_loc),
                beta_gl: args.beta_gl.unwrap_or(d.beta_gl),
                beta_loc: args.beta_loc.unwrap_or(d.beta_loc),
                gamma: args.gamma.unwrap_or(d.gamma),
            };
            hyper.validate()?;
            let mut runs = run_chains(chains, seed, |s| {
                let mut state = Mglda::init(corpus.clone(), hyper.clone(), s)?;
                let mut trace = Vec::with_capacity(iterations);
                state.run(iterations, |_, lj| trace.push(lj));
                let last = state.log_joint();
                Ok((ModelFile::from_mglda(&state), trace, last))
            })?;
            let finals: Vec<f64> = runs.iter().map(|r| r.2).collect();
            let (file, trace, _) = runs.swap_remove(best_chain(&finals));
            (file, trace)
        }
        ModelArg::Lda => {
            let d = LdaParams::default();
            let params = LdaParams {
                k: args.k_global.unwrap_or(d.k),
                alpha: args.alpha_gl.unwrap_or(d.alpha),
                beta: args.beta_gl.unwrap_or(d.beta),
            };
            params.validate()?;
            let mut runs = run_chains(chains, seed, |s| {
                let mut state = Lda::init(corpus.clone(), params.clone(), s)?;
                let mut trace = Vec::with_capacity(iterations);
                state.run(iterations, |_, lj| trace.push(lj));
                let last = state.log_joint();
                Ok((ModelFile::from_lda(&state), trace, last))
            })?;
            let finals: Vec<f64> = runs.iter().map(|r| r.2).collect();
            let (file, trace, _) = runs.swap_remove(best_chain(&finals));
            (file, trace)
        }
    };

    write_text(&out, &file.to_json()?)?;
    let trace_path = args.trace.unwrap_or_else(|| default_trace_path(&out));
    write_text(&trace_path, &trace_csv(&trace))?;
    if let Some(path) = args.topics_out {
        let mut report = report_header();
        report.push_str(&topic_report(&file, top_n));
        write_text(&path, &report)?;
    }
    writeln!(
        stdout,
        "{} model: {} sweeps, seed {}, log joint {}",
        file.kind(),
        file.iterations,
        file.seed,
        file.log_joint
    )?;
    Ok(())
}

pub fn cmd_topics(args: TopicsArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&require(args.model, "--model")?)?;
    let n = args.top_n.unwrap_or(DEFAULT_TOP_WORDS);
    if n == 0 {
        return Err(CliError::usage("-n must be at least 1"));
    }
    let mut report = report_header();
    report.push_str(&topic_report(&model, n));
    match args.out {
        Some(path) => write_text(&path, &report),
        None => Ok(stdout.write_all(report.as_bytes())?),
    }
}

fn ngram_config(n: usize) -> CliResult<NgramConfig> {
    let mut cfg = NgramConfig::unigrams_only();
    match n {
        1 => {}
        2 => cfg.bigrams = true,
        3 => {
            cfg.bigrams = true;
            cfg.trigrams = true;
        }
        _ => return Err(CliError::usage("--ngrams must be 1, 2 or 3")),
    }
    Ok(cfg)
}

pub fn cmd_rank(args: RankArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let corpus = Arc::new(load_corpus(&require(args.corpus, "--corpus")?)?);
    let d = RankSettings::default();
    let settings = RankSettings {
        samples: args.samples.unwrap_or(d.samples),
        buckets: args.buckets.unwrap_or(d.buckets),
        top_k: args.top_k.unwrap_or(d.top_k),
        epochs: args.epochs.unwrap_or(d.epochs),
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        ngrams: ngram_config(args.ngrams.unwrap_or(1))?,
        train_fraction: args.train_fraction.unwrap_or(d.train_fraction),
    };
    if settings.samples == 0 || settings.buckets == 0 || settings.top_k == 0 || settings.epochs == 0 {
        return Err(CliError::usage(
            "--samples, --buckets, --top-k and --epochs must be at least 1",
        ));
    }
    if !(settings.train_fraction > 0.0 && settings.train_fraction < 1.0) {
        return Err(CliError::usage("--train-fraction must lie strictly between 0 and 1"));
    }
    let wants_topics = args.topic_features || args.profiles_out.is_some();
    let topics = match (&args.model, wants_topics) {
        (Some(path), true) => {
            let model = load_model(path)?;
            Some(TopicProfiles::compute(&model, corpus.clone(), settings.samples, settings.seed)?)
        }
        (None, true) => {
            return Err(CliError::usage(
                "--topic-features and --profiles-out need --model",
            ))
        }
        (_, false) => None,
    };

    let outcome = evaluate_rankers(
        &corpus,
        if args.topic_features { topics.as_ref() } else { None },
        &settings,
    )?;
    let mut report = report_header();
    report.push_str(&loss_report_tsv(&outcome.aspects, &outcome.rows));
    match &args.report {
        Some(path) => write_text(path, &report)?,
        None => stdout.write_all(report.as_bytes())?,
    }

    if let Some(path) = &args.ranker_out {
        let file = RankerFile {
            format_version: FORMAT_VERSION,
            method: outcome.rows.last().map(|r| r.method.clone()).unwrap_or_default(),
            ranker: outcome.ranker,
        };
        write_text(path, &serde_json::to_string(&file)?)?;
    }
    if let (Some(path), Some(tp)) = (&args.profiles_out, &topics) {
        let mut w = BufWriter::new(File::create(path)?);
        write_profiles_jsonl(&mut w, &tp.profiles)?;
        w.flush()?;
    }
    if let Some(path) = &args.features_out {
        let (_, ratings) = corpus_ratings(&corpus)?;
        let (train, _) = split_indices(corpus.len(), settings.train_fraction, settings.seed)?;
        let evidence = if args.topic_features {
            topics.as_ref().map(|tp| (tp, settings.buckets, settings.top_k))
        } else {
            None
        };
        let vectors = corpus_features(&corpus, &train, &settings.ngrams, evidence)?;
        let index = FeatureIndex::build(&vectors);
        let mut text = String::new();
        for (fv, r) in vectors.iter().zip(&ratings) {
            let label: Vec<String> = r.iter().map(u32::to_string).collect();
            text.push_str(&index.sparse_line(&label.join(","), fv));
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    Ok(())
}

pub fn cmd_synth(args: SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let out = require(args.out, "--out")?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let (docs, truth) = match args.kind.unwrap_or(SynthKind::Mglda) {
        SynthKind::Mglda => {
            let d = MgldaSynthConfig::default();
            let config = MgldaSynthConfig {
                documents: args.documents.unwrap_or(d.documents),
                vocab_size: args.vocab_size.unwrap_or(d.vocab_size),
                k_global: args.k_global.unwrap_or(d.k_global),
                k_local: args.k_local.unwrap_or(d.k_local),
                window: args.window.unwrap_or(d.window),
                alpha_gl: args.alpha_gl.unwrap_or(d.alpha_gl),
                alpha_loc: args.alpha_loc.unwrap_or(d.alpha_loc),
                alpha_mix_gl: args.alpha_mix_gl.unwrap_or(d.alpha_mix_gl),
                alpha_mix_loc: args.alpha_mix_loc.unwrap_or(d.alpha_mix_loc),
                gamma: args.gamma.unwrap_or(d.gamma),
                peak: args.peak.unwrap_or(d.peak),
                ..d
            };
            config.validate().map_err(|e| CliError::usage(e.to_string()))?;
            let synth = generate_mglda(&config, seed)?;
            (
                synth.documents,
                SynthTruth::Mglda {
                    config,
                    truth: synth.truth,
                },
            )
        }
        SynthKind::Reviews => {
            let d = ReviewSynthConfig::default();
            let config = ReviewSynthConfig {
                documents: args.documents.unwrap_or(d.documents),
                levels: args.levels.unwrap_or(d.levels),
                noise: args.noise.unwrap_or(d.noise),
                ..d
            };
            if !(0.0..=1.0).contains(&config.noise) {
                return Err(CliError::usage("--noise must lie in [0, 1]"));
            }
            let docs = generate_reviews(&config, seed).map_err(|e| CliError::usage(e.to_string()))?;
            (docs, SynthTruth::Reviews { config })
        }
    };
    let mut text = String::new();
    for doc in &docs {
        text.push_str(&serde_json::to_string(doc)?);
        text.push('\n');
    }
    write_text(&out, &text)?;
    if let Some(path) = args.truth {
        let file = SynthTruthFile {
            format_version: FORMAT_VERSION,
            seed,
            truth,
        };
        write_text(&path, &serde_json::to_string(&file)?)?;
    }
    writeln!(stdout, "wrote {} documents to {}", docs.len(), out.display())?;
    Ok(())
}
