use crate::scalar::Scalar;

use super::{CountTables, Hyperparams};

/// The four factors of the collapsed joint, in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogJointTerms<F> {
    /// `log P(w | r, z)`
    pub words: F,
    /// `log P(v)`
    pub windows: F,
    /// `log P(r | v)`
    pub granularity: F,
    /// `log P(z | r, v)`
    pub topics: F,
}

impl<F: Scalar> LogJointTerms<F> {
    pub fn total(&self) -> F {
        self.words + self.windows + self.granularity + self.topics
    }
}

// Σ lnΓ(n + prior) over a table, evaluating lnΓ(prior) once for all zeros.
fn sum_ln_gamma<F: Scalar>(values: impl Iterator<Item = u32>, prior: F) -> F {
    let mut zeros = 0usize;
    let mut acc = F::zero();
    for n in values {
        if n == 0 {
            zeros += 1;
        } else {
            acc = acc + (F::from_count(n) + prior).ln_gamma();
        }
    }
    acc + F::from_usize_lossy(zeros) * prior.ln_gamma()
}

// K · (lnΓ(Kα) − K lnΓ(α)) style normalizer for a symmetric Dirichlet of size `k`.
fn dirichlet_norm<F: Scalar>(k: usize, alpha: F) -> F {
    let kf = F::from_usize_lossy(k);
    (kf * alpha).ln_gamma() - kf * alpha.ln_gamma()
}

/// Collapsed log joint computed from count tables with log-gamma.
pub fn log_joint_from_counts<F: Scalar>(
    counts: &CountTables,
    hyper: &Hyperparams<F>,
) -> LogJointTerms<F> {
    let c = F::from_count;
    let n = F::from_usize_lossy;
    let w = counts.vocab_size;

    // P(w | r, z)
    let mut words = F::zero();
    for (table, totals, k, beta) in [
        (&counts.word_global, &counts.topic_global, counts.k_global, hyper.beta_gl),
        (&counts.word_local, &counts.topic_local, counts.k_local, hyper.beta_loc),
    ] {
        let w_beta = n(w) * beta;
        words = words + n(k) * dirichlet_norm(w, beta);
        words = words + sum_ln_gamma(table.iter().copied(), beta);
        for &nz in totals.iter() {
            words = words - (c(nz) + w_beta).ln_gamma();
        }
    }

    // P(v)
    let t = counts.window;
    let num_sentences = counts.sentence_total.len();
    let t_gamma = n(t) * hyper.gamma;
    let mut windows = n(num_sentences) * dirichlet_norm(t, hyper.gamma);
    windows = windows + sum_ln_gamma(counts.sentence_window.iter().copied(), hyper.gamma);
    for &ns in &counts.sentence_total {
        windows = windows - (c(ns) + t_gamma).ln_gamma();
    }

    // P(r | v)
    let num_windows = counts.window_total.len();
    let mix_sum = hyper.alpha_mix_gl + hyper.alpha_mix_loc;
    let mut granularity = n(num_windows)
        * (mix_sum.ln_gamma() - hyper.alpha_mix_gl.ln_gamma() - hyper.alpha_mix_loc.ln_gamma());
    granularity = granularity
        + sum_ln_gamma(counts.window_global.iter().copied(), hyper.alpha_mix_gl)
        + sum_ln_gamma(counts.window_local.iter().copied(), hyper.alpha_mix_loc);
    for &nv in &counts.window_total {
        granularity = granularity - (c(nv) + mix_sum).ln_gamma();
    }

    // P(z | r, v)
    let k_alpha_gl = n(counts.k_global) * hyper.alpha_gl;
    let k_alpha_loc = n(counts.k_local) * hyper.alpha_loc;
    let mut topics = n(counts.doc_global.len()) * dirichlet_norm(counts.k_global, hyper.alpha_gl)
        + n(num_windows) * dirichlet_norm(counts.k_local, hyper.alpha_loc);
    topics = topics + sum_ln_gamma(counts.doc_global_topic.iter().copied(), hyper.alpha_gl);
    for &nd in &counts.doc_global {
        topics = topics - (c(nd) + k_alpha_gl).ln_gamma();
    }
    topics = topics + sum_ln_gamma(counts.window_local_topic.iter().copied(), hyper.alpha_loc);
    for &nl in &counts.window_local {
        topics = topics - (c(nl) + k_alpha_loc).ln_gamma();
    }

    LogJointTerms {
        words,
        windows,
        granularity,
        topics,
    }
}
