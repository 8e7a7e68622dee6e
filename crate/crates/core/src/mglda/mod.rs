//! Multi-grain LDA with a collapsed Gibbs sampler.
//!
//! Every token carries a window offset, a granularity (global or local) and a
//! topic. Global topics are mixed per document, local topics per sliding
//! window of `T` sentences, and the window a token uses is drawn from the
//! windows covering its sentence.

mod counts;
mod estimate;
mod joint;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{normalize, sample_index, Scalar};

pub use counts::{CountTables, Geometry};
pub use estimate::{SentenceTheta, TopicModel};
pub use joint::{log_joint_from_counts, LogJointTerms};

/// Default sweep count for a training run.
pub const DEFAULT_ITERATIONS: usize = 800;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[serde(rename = "gl")]
    Global,
    #[serde(rename = "loc")]
    Local,
}

impl Granularity {
    pub fn tag(self) -> &'static str {
        match self {
            Granularity::Global => "gl",
            Granularity::Local => "loc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Window offset within the sentence's covering windows, `0..T`.
    pub offset: u32,
    pub granularity: Granularity,
    pub topic: u32,
}

impl Assignment {
    pub fn global(offset: u32, topic: u32) -> Self {
        Self {
            offset,
            granularity: Granularity::Global,
            topic,
        }
    }

    pub fn local(offset: u32, topic: u32) -> Self {
        Self {
            offset,
            granularity: Granularity::Local,
            topic,
        }
    }
}

/// Priors and structural sizes.
///
/// Picking `k_global` around twice `k_local` tends to keep the local topics
/// focused on ratable aspects instead of soaking up document-wide themes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Hyperparams<F> {
    pub k_global: usize,
    pub k_local: usize,
    /// Sliding window length `T` in sentences.
    pub window: usize,
    pub alpha_gl: F,
    pub alpha_loc: F,
    pub alpha_mix_gl: F,
    pub alpha_mix_loc: F,
    pub beta_gl: F,
    pub beta_loc: F,
    pub gamma: F,
}

impl<F: Scalar> Default for Hyperparams<F> {
    fn default() -> Self {
        let f = F::from_f64_lossy;
        Self {
            k_global: 20,
            k_local: 10,
            window: 3,
            alpha_gl: f(0.1),
            alpha_loc: f(0.1),
            alpha_mix_gl: f(1.0),
            alpha_mix_loc: f(1.0),
            beta_gl: f(0.01),
            beta_loc: f(0.01),
            gamma: f(0.1),
        }
    }
}

impl<F: Scalar> Hyperparams<F> {
    pub fn validate(&self) -> Result<()> {
        if self.k_global == 0 || self.k_local == 0 {
            return Err(Error::InvalidHyperparams(
                "k_global and k_local must be at least 1".into(),
            ));
        }
        if self.window == 0 {
            return Err(Error::InvalidHyperparams("window must be at least 1".into()));
        }
        let named = [
            ("alpha_gl", self.alpha_gl),
            ("alpha_loc", self.alpha_loc),
            ("alpha_mix_gl", self.alpha_mix_gl),
            ("alpha_mix_loc", self.alpha_mix_loc),
            ("beta_gl", self.beta_gl),
            ("beta_loc", self.beta_loc),
            ("gamma", self.gamma),
        ];
        for (name, v) in named {
            if v.is_nan() || v <= F::zero() || v.is_infinite() {
                return Err(Error::InvalidHyperparams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Number of `(offset, granularity, topic)` cells per token.
    pub fn cells(&self) -> usize {
        self.window * (self.k_global + self.k_local)
    }
}

/// Normalized conditional over `(offset, granularity, topic)` for one token.
///
/// Cells are laid out offset-major; within an offset the `k_global` global
/// topics come first, then the `k_local` local ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional<F> {
    pub k_global: usize,
    pub k_local: usize,
    pub window: usize,
    pub probs: Vec<F>,
}

impl<F: Scalar> Conditional<F> {
    pub fn index(&self, a: Assignment) -> usize {
        let base = a.offset as usize * (self.k_global + self.k_local);
        match a.granularity {
            Granularity::Global => base + a.topic as usize,
            Granularity::Local => base + self.k_global + a.topic as usize,
        }
    }

    pub fn get(&self, a: Assignment) -> F {
        self.probs[self.index(a)]
    }

    /// Every cell paired with the assignment it stands for.
    pub fn cells(&self) -> impl Iterator<Item = (Assignment, F)> + '_ {
        cell_assignments(self.window, self.k_global, self.k_local)
            .zip(self.probs.iter().copied())
    }

    pub fn granularity_mass(&self, g: Granularity) -> F {
        self.cells()
            .filter(|(a, _)| a.granularity == g)
            .fold(F::zero(), |acc, (_, p)| acc + p)
    }
}

/// All assignments in kernel cell order.
pub fn cell_assignments(
    window: usize,
    k_global: usize,
    k_local: usize,
) -> impl Iterator<Item = Assignment> {
    (0..window as u32).flat_map(move |o| {
        (0..k_global as u32)
            .map(move |z| Assignment::global(o, z))
            .chain((0..k_local as u32).map(move |z| Assignment::local(o, z)))
    })
}

// Hyperparameter combinations reused by every kernel evaluation.
#[derive(Clone, Debug)]
struct Priors<F> {
    beta_gl: F,
    beta_loc: F,
    w_beta_gl: F,
    w_beta_loc: F,
    gamma: F,
    t_gamma: F,
    mix_gl: F,
    mix_loc: F,
    mix_sum: F,
    alpha_gl: F,
    alpha_loc: F,
    k_alpha_gl: F,
    k_alpha_loc: F,
}

impl<F: Scalar> Priors<F> {
    fn new(h: &Hyperparams<F>, vocab_size: usize) -> Self {
        let w = F::from_usize_lossy(vocab_size);
        Self {
            beta_gl: h.beta_gl,
            beta_loc: h.beta_loc,
            w_beta_gl: w * h.beta_gl,
            w_beta_loc: w * h.beta_loc,
            gamma: h.gamma,
            t_gamma: F::from_usize_lossy(h.window) * h.gamma,
            mix_gl: h.alpha_mix_gl,
            mix_loc: h.alpha_mix_loc,
            mix_sum: h.alpha_mix_gl + h.alpha_mix_loc,
            alpha_gl: h.alpha_gl,
            alpha_loc: h.alpha_loc,
            k_alpha_gl: F::from_usize_lossy(h.k_global) * h.alpha_gl,
            k_alpha_loc: F::from_usize_lossy(h.k_local) * h.alpha_loc,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Scratch<F> {
    cells: Vec<F>,
    global: Vec<F>,
    local: Vec<F>,
}

/// Writes the unnormalized conditional for word `w` in sentence `s` of
/// document `d` into `scratch.cells`. The token must already be removed.
#[allow(clippy::too_many_arguments)]
#[inline]
fn fill_weights<F: Scalar>(
    counts: &CountTables,
    geometry: &Geometry,
    p: &Priors<F>,
    d: usize,
    s: usize,
    w: usize,
    scratch: &mut Scratch<F>,
) {
    let kg = counts.k_global;
    let kl = counts.k_local;
    let t = counts.window;
    let c = F::from_count;

    // Word and document-level factors do not depend on the window.
    scratch.global.clear();
    let doc_den = c(counts.doc_global[d]) + p.k_alpha_gl;
    let wg = &counts.word_global[w * kg..(w + 1) * kg];
    let dg = &counts.doc_global_topic[d * kg..(d + 1) * kg];
    for z in 0..kg {
        let word = (c(wg[z]) + p.beta_gl) / (c(counts.topic_global[z]) + p.w_beta_gl);
        let topic = (c(dg[z]) + p.alpha_gl) / doc_den;
        scratch.global.push(word * topic);
    }
    scratch.local.clear();
    let wl = &counts.word_local[w * kl..(w + 1) * kl];
    for (&n_wz, &n_z) in wl.iter().zip(&counts.topic_local) {
        scratch
            .local
            .push((c(n_wz) + p.beta_loc) / (c(n_z) + p.w_beta_loc));
    }

    scratch.cells.clear();
    let sg = geometry.sentence(d, s);
    let sentence_den = c(counts.sentence_total[sg]) + p.t_gamma;
    for o in 0..t {
        let v = geometry.window_of(d, s, o);
        let window = (c(counts.sentence_window[sg * t + o]) + p.gamma) / sentence_den;
        let mix_den = c(counts.window_total[v]) + p.mix_sum;
        let gl = window * (c(counts.window_global[v]) + p.mix_gl) / mix_den;
        let n_loc = c(counts.window_local[v]);
        let loc = window * (n_loc + p.mix_loc) / mix_den / (n_loc + p.k_alpha_loc);
        for &g in &scratch.global {
            scratch.cells.push(gl * g);
        }
        let wlt = &counts.window_local_topic[v * kl..(v + 1) * kl];
        for (&word, &n_vz) in scratch.local.iter().zip(wlt) {
            scratch.cells.push(loc * word * (c(n_vz) + p.alpha_loc));
        }
    }
}

#[inline]
fn decode_cell(cell: usize, k_global: usize, k_local: usize) -> Assignment {
    let per = k_global + k_local;
    let o = (cell / per) as u32;
    let r = cell % per;
    if r < k_global {
        Assignment::global(o, r as u32)
    } else {
        Assignment::local(o, (r - k_global) as u32)
    }
}

/// Collapsed Gibbs sampler state over a shared corpus.
#[derive(Clone, Debug)]
pub struct MgldaState<F: Scalar> {
    corpus: Arc<Corpus>,
    hyper: Hyperparams<F>,
    priors: Priors<F>,
    geometry: Geometry,
    assignments: Vec<Vec<Assignment>>,
    counts: CountTables,
    seed: u64,
    rng: ChaCha8Rng,
    iteration: usize,
    scratch: Scratch<F>,
}

impl<F: Scalar> MgldaState<F> {
    /// Random initialization: every token gets a uniform offset, granularity
    /// and topic.
    pub fn init(corpus: Arc<Corpus>, hyper: Hyperparams<F>, seed: u64) -> Result<Self> {
        hyper.validate()?;
        if corpus.stats().tokens == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let assignments = corpus
            .documents()
            .iter()
            .map(|doc| {
                (0..doc.num_tokens())
                    .map(|_| {
                        let offset = rng.random_range(0..hyper.window as u32);
                        if rng.random_bool(0.5) {
                            Assignment::global(offset, rng.random_range(0..hyper.k_global as u32))
                        } else {
                            Assignment::local(offset, rng.random_range(0..hyper.k_local as u32))
                        }
                    })
                    .collect()
            })
            .collect();
        Self::assemble(corpus, hyper, assignments, seed, rng, 0)
    }

    /// Builds a state from explicit assignments, one vector per document in
    /// token order.
    pub fn from_assignments(
        corpus: Arc<Corpus>,
        hyper: Hyperparams<F>,
        assignments: Vec<Vec<Assignment>>,
        seed: u64,
    ) -> Result<Self> {
        Self::from_assignments_at(corpus, hyper, assignments, seed, 0)
    }

    pub fn from_assignments_at(
        corpus: Arc<Corpus>,
        hyper: Hyperparams<F>,
        assignments: Vec<Vec<Assignment>>,
        seed: u64,
        iteration: usize,
    ) -> Result<Self> {
        hyper.validate()?;
        if corpus.stats().tokens == 0 {
            return Err(Error::EmptyCorpus);
        }
        if assignments.len() != corpus.len() {
            return Err(Error::LengthMismatch {
                left: assignments.len(),
                right: corpus.len(),
            });
        }
        for (doc, a) in corpus.documents().iter().zip(&assignments) {
            if a.len() != doc.num_tokens() {
                return Err(Error::InvalidAssignment(format!(
                    "document `{}` has {} tokens but {} assignments",
                    doc.id,
                    doc.num_tokens(),
                    a.len()
                )));
            }
            if let Some(bad) = a.iter().find(|x| !Self::in_range(&hyper, x)) {
                return Err(Error::InvalidAssignment(format!("{bad:?} out of range")));
            }
        }
        let rng = ChaCha8Rng::seed_from_u64(seed);
        Self::assemble(corpus, hyper, assignments, seed, rng, iteration)
    }

    fn in_range(hyper: &Hyperparams<F>, a: &Assignment) -> bool {
        let k = match a.granularity {
            Granularity::Global => hyper.k_global,
            Granularity::Local => hyper.k_local,
        };
        (a.offset as usize) < hyper.window && (a.topic as usize) < k
    }

    fn assemble(
        corpus: Arc<Corpus>,
        hyper: Hyperparams<F>,
        assignments: Vec<Vec<Assignment>>,
        seed: u64,
        rng: ChaCha8Rng,
        iteration: usize,
    ) -> Result<Self> {
        let geometry = Geometry::new(&corpus, hyper.window);
        let mut counts =
            CountTables::zeros(&geometry, hyper.k_global, hyper.k_local, corpus.vocab_size());
        for (d, doc) in corpus.documents().iter().enumerate() {
            let mut i = 0;
            for (s, sentence) in doc.sentences.iter().enumerate() {
                for &w in &sentence.tokens {
                    counts.add(&geometry, d, s, w as usize, assignments[d][i]);
                    i += 1;
                }
            }
        }
        let priors = Priors::new(&hyper, corpus.vocab_size());
        Ok(Self {
            corpus,
            hyper,
            priors,
            geometry,
            assignments,
            counts,
            seed,
            rng,
            iteration,
            scratch: Scratch::default(),
        })
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn hyperparams(&self) -> &Hyperparams<F> {
        &self.hyper
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn assignments(&self) -> &[Vec<Assignment>] {
        &self.assignments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Number of windows of document `d` (`S_d + T - 1`).
    pub fn windows_in(&self, d: usize) -> usize {
        self.geometry.windows_in(d)
    }

    /// Recounts every table from the assignments and compares exactly.
    pub fn is_consistent(&self) -> bool {
        self.recount() == self.counts
    }

    pub fn recount(&self) -> CountTables {
        CountTables::recount(
            &self.corpus,
            &self.geometry,
            self.hyper.k_global,
            self.hyper.k_local,
            &self.assignments,
        )
    }

    /// `(sentence, word)` of token `i` in document `d`.
    pub fn locate(&self, d: usize, i: usize) -> Result<(usize, usize)> {
        let doc = self.corpus.document(d).ok_or(Error::DocOutOfRange {
            index: d,
            len: self.corpus.len(),
        })?;
        let mut rest = i;
        for (s, sentence) in doc.sentences.iter().enumerate() {
            if rest < sentence.len() {
                return Ok((s, sentence.tokens[rest] as usize));
            }
            rest -= sentence.len();
        }
        Err(Error::Invalid(format!(
            "token {i} out of range (document has {} tokens)",
            doc.num_tokens()
        )))
    }

    /// Reassigns one token, keeping the count tables in step.
    pub fn set_assignment(&mut self, d: usize, i: usize, a: Assignment) -> Result<()> {
        if !Self::in_range(&self.hyper, &a) {
            return Err(Error::InvalidAssignment(format!("{a:?} out of range")));
        }
        let (s, w) = self.locate(d, i)?;
        let old = self.assignments[d][i];
        self.counts.remove(&self.geometry, d, s, w, old);
        self.counts.add(&self.geometry, d, s, w, a);
        self.assignments[d][i] = a;
        Ok(())
    }

    /// Normalized full conditional of token `i` in document `d`, evaluated with
    /// the token's own assignment excluded. The state is left unchanged.
    pub fn conditional(&mut self, d: usize, i: usize) -> Result<Conditional<F>> {
        let (s, w) = self.locate(d, i)?;
        let a = self.assignments[d][i];
        self.counts.remove(&self.geometry, d, s, w, a);
        fill_weights(
            &self.counts,
            &self.geometry,
            &self.priors,
            d,
            s,
            w,
            &mut self.scratch,
        );
        self.counts.add(&self.geometry, d, s, w, a);
        let mut probs = self.scratch.cells.clone();
        normalize(&mut probs);
        Ok(Conditional {
            k_global: self.hyper.k_global,
            k_local: self.hyper.k_local,
            window: self.hyper.window,
            probs,
        })
    }

    /// One full sweep in corpus order using the state's own random stream.
    pub fn sweep(&mut self) {
        let mut rng = self.rng.clone();
        for d in 0..self.corpus.len() {
            self.sweep_document_with(d, &mut rng);
        }
        self.rng = rng;
        self.iteration += 1;
    }

    /// Runs `iterations` sweeps, reporting `(iteration, log_joint)` after each.
    pub fn run(&mut self, iterations: usize, mut trace: impl FnMut(usize, F)) {
        for _ in 0..iterations {
            self.sweep();
            trace(self.iteration, self.log_joint());
        }
    }

    /// Resamples only document `d`'s tokens once, drawing from `rng`. All other
    /// documents' assignments stay fixed.
    pub fn sweep_document_with<R: Rng + ?Sized>(&mut self, d: usize, rng: &mut R) {
        let corpus = Arc::clone(&self.corpus);
        let doc = &corpus.documents()[d];
        let assignments = &mut self.assignments[d];
        let mut i = 0;
        for (s, sentence) in doc.sentences.iter().enumerate() {
            for &w in &sentence.tokens {
                let w = w as usize;
                let old = assignments[i];
                self.counts.remove(&self.geometry, d, s, w, old);
                fill_weights(
                    &self.counts,
                    &self.geometry,
                    &self.priors,
                    d,
                    s,
                    w,
                    &mut self.scratch,
                );
                let u = F::from_f64_lossy(rng.random::<f64>());
                let cell = sample_index(&self.scratch.cells, u);
                let new = decode_cell(cell, self.hyper.k_global, self.hyper.k_local);
                self.counts.add(&self.geometry, d, s, w, new);
                assignments[i] = new;
                i += 1;
            }
        }
    }

    /// Replaces document `d`'s assignments wholesale (used to undo a
    /// document-local resampling run).
    pub fn restore_document(&mut self, d: usize, saved: &[Assignment]) {
        let corpus = Arc::clone(&self.corpus);
        let doc = &corpus.documents()[d];
        let mut i = 0;
        for (s, sentence) in doc.sentences.iter().enumerate() {
            for &w in &sentence.tokens {
                let w = w as usize;
                self.counts
                    .remove(&self.geometry, d, s, w, self.assignments[d][i]);
                self.counts.add(&self.geometry, d, s, w, saved[i]);
                self.assignments[d][i] = saved[i];
                i += 1;
            }
        }
    }

    /// Log of the collapsed joint `P(w, v, r, z)`.
    pub fn log_joint(&self) -> F {
        self.log_joint_terms().total()
    }

    pub fn log_joint_terms(&self) -> LogJointTerms<F> {
        log_joint_from_counts(&self.counts, &self.hyper)
    }
}
