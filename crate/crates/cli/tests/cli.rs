use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mglda(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mglda"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mglda(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str], code: i32) -> String {
    let out = mglda(dir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    String::from_utf8(out.stderr).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn body(report: &str) -> Vec<&str> {
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("# format_version=1"));
    lines.collect()
}

/// A small rated review corpus, ingested.
fn reviews(docs: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "reviews", "--documents", docs, "--seed", "4", "--out", "r.jsonl"]);
    ok(d, &["ingest", "--input", "r.jsonl", "--out", "c.json"]);
    let p = d.to_path_buf();
    (dir, p)
}

#[test]
fn ingest_reports_kept_documents() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("in.jsonl"),
        "{\"id\":\"a\",\"text\":\"The room was clean. Staff were great!\"}\n\
         {\"id\":\"b\",\"text\":\"Noisy street.\",\"ratings\":{\"rooms\":2}}\n",
    )
    .unwrap();
    fs::write(d.join("stop.txt"), "the\nwere\nwas\n").unwrap();
    let report = ok(d, &["ingest", "--input", "in.jsonl", "--stopwords", "stop.txt", "--out", "c.json"]);
    assert!(report.contains("documents kept\t2"));
    let corpus: serde_json::Value = serde_json::from_str(&read(d, "c.json")).unwrap();
    assert_eq!(corpus["format_version"], 1);
    assert_eq!(corpus["corpus"]["documents"].as_array().unwrap().len(), 2);
    assert!(!read(d, "c.json").contains("\"the\""));
}

#[test]
fn ingest_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.jsonl"), "{\"id\":\"a\",\"text\":\"x.\"}\n{nope\n").unwrap();
    let err = fails(d, &["ingest", "--input", "bad.jsonl", "--out", "c.json"], 3);
    assert!(err.contains("line 2"), "{err}");
    fs::write(d.join("empty.jsonl"), "").unwrap();
    let err = fails(d, &["ingest", "--input", "empty.jsonl", "--out", "c.json"], 3);
    assert!(err.contains("empty corpus"), "{err}");
    fails(d, &["ingest", "--input", "missing.jsonl", "--out", "c.json"], 3);
    fails(d, &["ingest", "--out", "c.json"], 2);
}

#[test]
fn train_writes_model_and_trace() {
    let (_g, d) = reviews("40");
    let d = &d;
    let small = ["--k-global", "2", "--k-local", "3", "--seed", "9"];
    let mut args = vec!["train", "--corpus", "c.json", "--out", "m0.json", "--iterations", "0"];
    args.extend(small);
    ok(d, &args);
    let m0: serde_json::Value = serde_json::from_str(&read(d, "m0.json")).unwrap();
    assert_eq!(m0["iterations"], 0);
    assert_eq!(m0["kind"], "mglda");
    assert_eq!(body(&read(d, "m0.trace.csv")), ["iteration,log_joint"]);

    for out in ["a.json", "b.json"] {
        let mut args = vec!["train", "--corpus", "c.json", "--out", out, "--iterations", "7"];
        args.extend(small);
        ok(d, &args);
    }
    assert_eq!(read(d, "a.json"), read(d, "b.json"));
    let trace = read(d, "a.trace.csv");
    let rows = body(&trace);
    assert_eq!(rows.len(), 8);
    assert!(rows[7].starts_with("7,"));
}

#[test]
fn chains_keep_the_best_log_joint() {
    let (_g, d) = reviews("30");
    let d = &d;
    let base = ["train", "--corpus", "c.json", "--k-global", "2", "--k-local", "2", "--iterations", "5"];
    let joint = |name: &str| -> f64 {
        let v: serde_json::Value = serde_json::from_str(&read(d, name)).unwrap();
        v["log_joint"].as_f64().unwrap()
    };
    for (seed, out) in [("20", "s20.json"), ("21", "s21.json"), ("22", "s22.json")] {
        let mut a = base.to_vec();
        a.extend(["--seed", seed, "--out", out]);
        ok(d, &a);
    }
    let mut a = base.to_vec();
    a.extend(["--seed", "20", "--chains", "3", "--out", "best.json"]);
    ok(d, &a);
    let singles = ["s20.json", "s21.json", "s22.json"];
    let winner = singles
        .iter()
        .copied()
        .reduce(|best, s| if joint(s) > joint(best) { s } else { best })
        .unwrap();
    assert_eq!(read(d, "best.json"), read(d, winner));
}

#[test]
fn topics_report_layout() {
    let (_g, d) = reviews("40");
    let d = &d;
    ok(d, &["train", "--corpus", "c.json", "--out", "m.json", "--k-global", "2", "--k-local", "3", "--iterations", "5"]);
    let one = ok(d, &["topics", "--model", "m.json", "-n", "1"]);
    let rows = body(&one);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.split('\t').count() == 3));
    assert_eq!(rows.iter().filter(|r| r.starts_with("gl\t")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.starts_with("loc\t")).count(), 3);

    let full = ok(d, &["topics", "--model", "m.json"]);
    for row in body(&full) {
        let probs: Vec<f64> = row
            .split('\t')
            .skip(2)
            .map(|c| c.rsplit(':').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(probs.len(), 12);
        assert!(probs.windows(2).all(|p| p[0] >= p[1]), "{row}");
    }

    ok(d, &["train", "--corpus", "c.json", "--out", "l.json", "--model", "lda", "--k-global", "4", "--iterations", "3"]);
    let lda = ok(d, &["topics", "--model", "l.json", "-n", "2"]);
    let rows = body(&lda);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("lda\t")));
    fails(d, &["topics", "--model", "l.json", "-n", "0"], 2);
}

#[test]
fn loaders_reject_other_format_versions() {
    let (_g, d) = reviews("20");
    let d = &d;
    ok(d, &["train", "--corpus", "c.json", "--out", "m.json", "--k-global", "2", "--k-local", "2", "--iterations", "1"]);
    let model = read(d, "m.json").replace("\"format_version\":1", "\"format_version\":7");
    fs::write(d.join("m7.json"), model).unwrap();
    let err = fails(d, &["topics", "--model", "m7.json"], 3);
    assert!(err.contains("format version 7"), "{err}");
    let corpus = read(d, "c.json").replace("\"format_version\":1", "\"format_version\":0");
    fs::write(d.join("c0.json"), corpus).unwrap();
    fails(d, &["train", "--corpus", "c0.json", "--out", "x.json"], 3);
}

#[test]
fn rank_rows_and_columns() {
    let (_g, d) = reviews("120");
    let d = &d;
    ok(d, &["train", "--corpus", "c.json", "--out", "m.json", "--k-global", "2", "--k-local", "6", "--iterations", "30"]);
    let plain = ok(d, &["rank", "--corpus", "c.json", "--epochs", "3"]);
    let rows = body(&plain);
    assert_eq!(
        rows[0],
        "method\tcheck-in\tservice\tvalue\tlocation\trooms\tcleanliness\toverall"
    );
    let methods: Vec<&str> = rows[1..].iter().map(|r| r.split('\t').next().unwrap()).collect();
    assert_eq!(methods, ["baseline", "prank"]);

    ok(d, &[
        "rank", "--corpus", "c.json", "--model", "m.json", "--topic-features", "--epochs", "3",
        "--samples", "5", "--report", "loss.tsv", "--ranker-out", "ranker.json",
        "--profiles-out", "p.jsonl", "--features-out", "f.txt",
    ]);
    let report = read(d, "loss.tsv");
    let methods: Vec<&str> = body(&report)[1..]
        .iter()
        .map(|r| r.split('\t').next().unwrap())
        .collect();
    assert_eq!(methods, ["baseline", "prank", "prank+mglda"]);
    let ranker: serde_json::Value = serde_json::from_str(&read(d, "ranker.json")).unwrap();
    assert_eq!(ranker["method"], "prank+mglda");
    assert_eq!(ranker["ranker"]["aspects"].as_array().unwrap().len(), 6);
    assert!(read(d, "f.txt").lines().all(|l| l.contains(":1")));
    assert!(read(d, "p.jsonl").lines().next().unwrap().starts_with("{\"doc\":"));
    assert_eq!(read(d, "f.txt").lines().count(), 120);
}

#[test]
fn rank_needs_ratings_and_a_model() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--documents", "20", "--out", "s.jsonl"]);
    ok(d, &["ingest", "--input", "s.jsonl", "--out", "c.json"]);
    let err = fails(d, &["rank", "--corpus", "c.json"], 3);
    assert!(err.contains("ratings"), "{err}");
    fails(d, &["rank", "--corpus", "c.json", "--topic-features"], 2);
}

#[test]
fn synth_is_seeded_and_normalized() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = |out: &'static str, truth: &'static str, seed: &'static str| {
        vec![
            "synth", "--k-global", "1", "--k-local", "1", "--documents", "50", "--seed", seed,
            "--out", out, "--truth", truth,
        ]
    };
    ok(d, &args("a.jsonl", "a.json", "5"));
    ok(d, &args("b.jsonl", "b.json", "5"));
    ok(d, &args("c.jsonl", "c.json", "6"));
    assert_eq!(read(d, "a.jsonl"), read(d, "b.jsonl"));
    assert_eq!(read(d, "a.json"), read(d, "b.json"));
    assert_ne!(read(d, "a.jsonl"), read(d, "c.jsonl"));
    assert_eq!(read(d, "a.jsonl").lines().count(), 50);

    let truth: serde_json::Value = serde_json::from_str(&read(d, "a.json")).unwrap();
    assert_eq!(truth["format_version"], 1);
    for table in ["phi_global", "phi_local"] {
        let rows = truth[table].as_array().unwrap();
        assert_eq!(rows.len(), 1);
        let sum: f64 = rows[0].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
    fails(d, &["synth", "--peak", "2", "--out", "x.jsonl"], 2);
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let (_g, d) = reviews("20");
    let d = &d;
    fs::write(
        d.join("run.toml"),
        "[train]\ncorpus = \"c.json\"\nk-global = 2\nk-local = 2\niterations = 4\nseed = 3\n",
    )
    .unwrap();
    ok(d, &["--config", "run.toml", "train", "--out", "a.json"]);
    ok(d, &["train", "--config", "run.toml", "--out", "b.json", "--iterations", "2"]);
    let a: serde_json::Value = serde_json::from_str(&read(d, "a.json")).unwrap();
    let b: serde_json::Value = serde_json::from_str(&read(d, "b.json")).unwrap();
    assert_eq!(a["iterations"], 4);
    assert_eq!(b["iterations"], 2);
    assert_eq!(a["hyperparams"]["k_local"], 2);
    assert_eq!(a["seed"], 3);

    fs::write(d.join("bad.toml"), "[train]\nunknown-key = 1\n").unwrap();
    fails(d, &["--config", "bad.toml", "train", "--out", "x.json"], 2);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fails(d, &["frobnicate"], 2);
    fails(d, &["train", "--window", "zero"], 2);
    ok(d, &["--help"]);
}
