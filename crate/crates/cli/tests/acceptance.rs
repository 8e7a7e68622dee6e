//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mglda::eval::matched_topic_distance;
use mglda::lda::LdaState;
use mglda::mglda::{cell_assignments, Hyperparams};
use mglda::ranker::{ranking_loss, LossRow, RankerModel};
use mglda::synth::{generate_reviews, generate_separable_ordinal, ReviewSynthConfig};
use mglda::{build_corpus, Assignment, Corpus, Lda, LdaParams, Mglda, RawDocument};
use mglda_cli::args::{IngestArgs, SynthArgs, SynthKind};
use mglda_cli::artifacts::{SynthTruth, SynthTruthFile};
use mglda_cli::commands::{cmd_ingest, cmd_synth, load_corpus};
use mglda_cli::pipeline::{evaluate_rankers, RankSettings, TopicProfiles};
use mglda::persist::ModelFile;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs())
        .fold(0.0, f64::max)
}

/// Documents of one to three sentences; a sentence made only of the stopword
/// `zz` keeps an empty sentence in the corpus.
fn micro_corpus(rng: &mut ChaCha8Rng, max_tokens: usize) -> Corpus {
    let vocab = rng.random_range(2..=4);
    let mut budget = max_tokens;
    let mut docs = Vec::new();
    for d in 0..rng.random_range(1..=3) {
        let mut sentences = Vec::new();
        for s in 0..rng.random_range(1..=3) {
            let floor = usize::from(s == 0);
            let n = rng.random_range(floor..=3).min(budget);
            budget -= n;
            let words: Vec<String> = (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect();
            sentences.push(if words.is_empty() { "zz".to_string() } else { words.join(" ") });
        }
        docs.push(RawDocument {
            id: format!("d{d}"),
            text: sentences.join(". ") + ".",
            ratings: None,
        });
        if budget == 0 {
            break;
        }
    }
    let stop: HashSet<String> = ["zz".to_string()].into();
    build_corpus(docs, &stop).expect("nonempty corpus").0
}

fn random_corpus(rng: &mut ChaCha8Rng, tokens: usize, vocab: usize) -> Corpus {
    let mut docs = Vec::new();
    let mut left = tokens;
    while left > 0 {
        let mut sentences = Vec::new();
        for _ in 0..rng.random_range(2..=8) {
            let n = rng.random_range(1..=8).min(left);
            left -= n;
            let words: Vec<String> = (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect();
            sentences.push(words.join(" "));
            if left == 0 {
                break;
            }
        }
        docs.push(RawDocument {
            id: format!("d{}", docs.len()),
            text: sentences.join(". ") + ".",
            ratings: None,
        });
    }
    build_corpus(docs, &HashSet::new()).unwrap().0
}

fn oracle_mglda(corpus: Arc<Corpus>, hyper: Hyperparams<f64>, seed: u64) -> f64 {
    let (t, kg, kl) = (hyper.window, hyper.k_global, hyper.k_local);
    let mut st = Mglda::init(corpus.clone(), hyper, seed).unwrap();
    st.sweep();
    let mut worst = 0.0f64;
    for d in 0..corpus.len() {
        for i in 0..corpus.documents()[d].num_tokens() {
            let original = st.assignments()[d][i];
            let cells: Vec<Assignment> = cell_assignments(t, kg, kl).collect();
            let logs: Vec<f64> = cells
                .iter()
                .map(|&a| {
                    st.set_assignment(d, i, a).unwrap();
                    st.log_joint()
                })
                .collect();
            st.set_assignment(d, i, original).unwrap();
            let cond = st.conditional(d, i).unwrap();
            let got: Vec<f64> = cells.iter().map(|&a| cond.get(a)).collect();
            worst = worst.max(max_rel_err(&got, &softmax(&logs)));
        }
    }
    worst
}

fn oracle_lda(corpus: Arc<Corpus>, params: LdaParams, seed: u64) -> f64 {
    let k = params.k as u32;
    let mut st = Lda::init(corpus.clone(), params, seed).unwrap();
    st.sweep();
    let mut worst = 0.0f64;
    for d in 0..corpus.len() {
        for i in 0..corpus.documents()[d].num_tokens() {
            let original = st.assignments()[d][i];
            let logs: Vec<f64> = (0..k)
                .map(|z| {
                    st.set_assignment(d, i, z).unwrap();
                    st.log_joint()
                })
                .collect();
            st.set_assignment(d, i, original).unwrap();
            let got = st.conditional(d, i).unwrap();
            worst = worst.max(max_rel_err(&got, &softmax(&logs)));
        }
    }
    worst
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_mg, mut worst_lda) = (0.0f64, 0.0f64);
    let corpora = 30;
    for c in 0..corpora {
        let corpus = Arc::new(micro_corpus(&mut rng, 12));
        let hyper = Hyperparams {
            k_global: rng.random_range(1..=2),
            k_local: rng.random_range(1..=2),
            window: rng.random_range(1..=3),
            alpha_gl: rng.random_range(0.05..2.0),
            alpha_loc: rng.random_range(0.05..2.0),
            alpha_mix_gl: rng.random_range(0.2..3.0),
            alpha_mix_loc: rng.random_range(0.2..3.0),
            beta_gl: rng.random_range(0.01..1.0),
            beta_loc: rng.random_range(0.01..1.0),
            gamma: rng.random_range(0.05..2.0),
        };
        worst_mg = worst_mg.max(oracle_mglda(corpus.clone(), hyper, c));
        let params = LdaParams {
            k: rng.random_range(1..=3),
            alpha: rng.random_range(0.05..2.0),
            beta: rng.random_range(0.01..1.0),
        };
        worst_lda = worst_lda.max(oracle_lda(corpus, params, c));
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    outcome(
        worst_mg <= 1e-9 && worst_lda <= 1e-9 && fast,
        format!(
            "{corpora} micro-corpora, max relative error {worst_mg:.2e} (MG-LDA) and {worst_lda:.2e} (LDA), {time}"
        ),
    )
}

fn count_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let corpus = Arc::new(random_corpus(&mut rng, 1000, 60));
    let hyper = Hyperparams {
        k_global: 4,
        k_local: 3,
        window: 3,
        ..Default::default()
    };
    let mut st = Mglda::init(corpus.clone(), hyper, 5).unwrap();
    for _ in 0..100 {
        st.sweep();
    }
    let same = st.recount() == *st.counts();
    let (fast, time) = within(Duration::from_secs(5), start);
    outcome(
        same && fast,
        format!(
            "{} tokens, 100 sweeps, recount {} incremental tables, {time}",
            corpus.stats().tokens,
            if same { "matches" } else { "DIFFERS from" }
        ),
    )
}

fn lda_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let corpus = Arc::new(random_corpus(&mut rng, 500, 40));
    let k = 5;
    let topics: Vec<Vec<u32>> = corpus
        .documents()
        .iter()
        .map(|d| (0..d.num_tokens()).map(|_| rng.random_range(0..k as u32)).collect())
        .collect();
    let hyper = Hyperparams {
        k_global: k,
        k_local: 2,
        window: 1,
        alpha_gl: 0.3,
        beta_gl: 0.05,
        ..Default::default()
    };
    let frozen = topics
        .iter()
        .map(|d| d.iter().map(|&z| Assignment::global(0, z)).collect())
        .collect();
    let mut mg = Mglda::from_assignments(corpus.clone(), hyper, frozen, 1).unwrap();
    let params = LdaParams {
        k,
        alpha: 0.3,
        beta: 0.05,
    };
    let mut lda: LdaState<f64> = Lda::from_assignments(corpus.clone(), params, topics, 1).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for d in 0..corpus.len() {
        for i in 0..corpus.documents()[d].num_tokens() {
            let cond = mg.conditional(d, i).unwrap();
            let mut z_only: Vec<f64> = (0..k as u32).map(|z| cond.get(Assignment::global(0, z))).collect();
            let total: f64 = z_only.iter().sum();
            z_only.iter_mut().for_each(|p| *p /= total);
            let mut reference = lda.conditional(d, i).unwrap();
            let total: f64 = reference.iter().sum();
            reference.iter_mut().for_each(|p| *p /= total);
            worst = worst.max(max_rel_err(&z_only, &reference));
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-12 && checked == 500,
        format!("{checked} tokens, max relative error {worst:.2e}"),
    )
}

fn synthetic_recovery() -> Outcome {
    let start = Instant::now();
    let mut distances = Vec::new();
    for seed in 1..=5u64 {
        let dir = TempDir::new().unwrap();
        let jsonl = dir.path().join("synth.jsonl");
        let truth_path = dir.path().join("truth.json");
        let corpus_path = dir.path().join("corpus.json");
        let mut sink = Vec::new();
        cmd_synth(
            SynthArgs {
                kind: Some(SynthKind::Mglda),
                out: Some(jsonl.clone()),
                truth: Some(truth_path.clone()),
                seed: Some(seed),
                ..Default::default()
            },
            &mut sink,
        )
        .unwrap();
        cmd_ingest(
            IngestArgs {
                input: Some(jsonl),
                out: Some(corpus_path.clone()),
                ..Default::default()
            },
            &mut sink,
        )
        .unwrap();
        let corpus = Arc::new(load_corpus(&corpus_path).unwrap());
        let truth = SynthTruthFile::from_json(&fs::read_to_string(&truth_path).unwrap()).unwrap();
        let SynthTruth::Mglda { config, truth } = truth.truth else {
            panic!("mglda truth expected");
        };
        // The window prior matches the generator's; every other prior is the default.
        let hyper = Hyperparams {
            k_global: config.k_global,
            k_local: config.k_local,
            window: config.window,
            gamma: config.gamma,
            ..Default::default()
        };
        let mut st = Mglda::init(corpus.clone(), hyper, seed).unwrap();
        st.run(800, |_, _| {});
        let est = st.estimate_phi();
        let tv = matched_topic_distance(&truth.vocabulary, &truth.phi_local, &est.phi_local, corpus.vocabulary())
            .unwrap();
        distances.push(tv);
    }
    let good = distances.iter().filter(|&&d| d < 0.2).count();
    let (fast, time) = within(Duration::from_secs(180), start);
    let list: Vec<String> = distances.iter().map(|d| format!("{d:.3}")).collect();
    outcome(
        good >= 4 && fast,
        format!("mean matched TV per seed [{}], {good}/5 below 0.2, {time}", list.join(", ")),
    )
}

fn pranking_correctness() -> Outcome {
    let names = vec!["a".to_string()];
    let mut hand = RankerModel::<f64>::new(&names, 3).unwrap();
    let x = mglda::features::FeatureVector(["x".to_string()].into());
    let before = hand.predict(0, &x);
    hand.prank_update(0, &x, 1).unwrap();
    let a = &hand.aspects[0];
    let hand_ok = before == 3
        && a.weights.get("x") == Some(&-2.0)
        && a.boundaries == [1.0, 1.0]
        && hand.predict(0, &x) == 1;

    let data = generate_separable_ordinal(1000, 12, 5, 8).unwrap();
    let mut model = RankerModel::<f64>::new(&names, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ordered = true;
    let mut converged = None;
    for epoch in 1..=20 {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order {
            model.prank_update(0, &data[i].features, data[i].ratings[0]).unwrap();
            ordered &= model.aspects[0].boundaries_ordered();
        }
        let row = LossRow::evaluate("prank", 1, &data, |a, x| model.predict(a, x)).unwrap();
        if row.overall == 0.0 {
            converged = Some(epoch);
            break;
        }
    }
    outcome(
        hand_ok && ordered && converged.is_some(),
        format!(
            "hand trace {}, separable set {}, boundaries {}",
            if hand_ok { "reproduced" } else { "WRONG" },
            converged.map_or("not separated in 20 epochs".to_string(), |e| format!("at zero loss after {e} epochs")),
            if ordered { "ordered after every update" } else { "OUT OF ORDER" }
        ),
    )
}

fn loss_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=40);
        let actual: Vec<u32> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let predicted: Vec<u32> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        // Histogram of absolute differences.
        let mut hist = [0u64; 5];
        for (a, p) in actual.iter().zip(&predicted) {
            hist[(*a as i64 - *p as i64).unsigned_abs() as usize] += 1;
        }
        let weighted: u64 = hist.iter().enumerate().map(|(d, c)| d as u64 * c).sum();
        let brute = weighted as f64 / n as f64;
        if ranking_loss(&actual, &predicted).unwrap() != brute {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("100 random rating pairs, {mismatches} mismatches"))
}

fn feature_benefit() -> Outcome {
    let mut rel = Vec::new();
    let mut rows = Vec::new();
    for seed in 1..=5u64 {
        let raw = generate_reviews(&ReviewSynthConfig::default(), seed).unwrap();
        let corpus = Arc::new(build_corpus(raw, &HashSet::new()).unwrap().0);
        let hyper = Hyperparams {
            k_global: 4,
            k_local: 6,
            window: 3,
            ..Default::default()
        };
        let mut st = Mglda::init(corpus.clone(), hyper, seed).unwrap();
        st.run(800, |_, _| {});
        let model = ModelFile::from_mglda(&st);
        let settings = RankSettings {
            seed,
            ..Default::default()
        };
        let profiles = TopicProfiles::compute(&model, corpus.clone(), settings.samples, seed).unwrap();
        let out = evaluate_rankers(&corpus, Some(&profiles), &settings).unwrap();
        let (base, plain, rich) = (out.rows[0].overall, out.rows[1].overall, out.rows[2].overall);
        rows.push(format!("{base:.3}/{plain:.3}/{rich:.3}"));
        rel.push((plain - rich) / plain);
    }
    let mean = rel.iter().sum::<f64>() / rel.len() as f64;
    outcome(
        mean >= 0.05,
        format!(
            "baseline/prank/prank+mglda loss per seed [{}], mean relative reduction {:.1}%",
            rows.join(", "),
            100.0 * mean
        ),
    )
}

fn run_pipeline(dir: &Path) {
    let bin = env!("CARGO_BIN_EXE_mglda");
    let steps: [&[&str]; 7] = [
        &["synth", "--kind", "reviews", "--documents", "150", "--seed", "11", "--out", "reviews.jsonl", "--truth", "truth.json"],
        &["ingest", "--input", "reviews.jsonl", "--out", "corpus.json"],
        &["train", "--corpus", "corpus.json", "--out", "mglda.json", "--k-global", "3", "--k-local", "6",
          "--iterations", "60", "--chains", "2", "--seed", "11", "--topics-out", "mglda.topics.tsv"],
        &["train", "--corpus", "corpus.json", "--out", "lda.json", "--model", "lda", "--k-global", "8",
          "--iterations", "60", "--seed", "11"],
        &["topics", "--model", "lda.json", "-n", "5", "--out", "lda.topics.tsv"],
        &["rank", "--corpus", "corpus.json", "--model", "mglda.json", "--topic-features", "--samples", "20",
          "--seed", "11", "--report", "mglda.loss.tsv", "--ranker-out", "mglda.ranker.json",
          "--profiles-out", "mglda.profiles.jsonl", "--features-out", "mglda.features.txt"],
        &["rank", "--corpus", "corpus.json", "--model", "lda.json", "--topic-features", "--samples", "20",
          "--seed", "11", "--report", "lda.loss.tsv", "--ngrams", "3"],
    ];
    for args in steps {
        let out = Command::new(bin).current_dir(dir).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn determinism() -> Outcome {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    let list = |d: &Path| {
        let mut names: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names = list(a.path());
    let same_names = names == list(b.path());
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(a.path().join(n)).ok() != fs::read(b.path().join(n)).ok())
        .collect();
    outcome(
        same_names && differing.is_empty(),
        format!("{} artifacts compared, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("count consistency", count_consistency),
        ("LDA reduction", lda_reduction),
        ("synthetic recovery", synthetic_recovery),
        ("PRanking correctness", pranking_correctness),
        ("ranking-loss arithmetic", loss_arithmetic),
        ("directional feature benefit", feature_benefit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        println!(
            "criterion {} [{name}]: {} | {} | {:.1}s",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
