use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{normalize, Scalar};

use super::MgldaState;

/// Smoothed word distributions of every topic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TopicModel<F> {
    /// `k_global` rows over the vocabulary.
    pub phi_global: Vec<Vec<F>>,
    /// `k_local` rows over the vocabulary.
    pub phi_local: Vec<Vec<F>>,
}

/// Topic distribution of one sentence, marginalized over its covering windows.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceTheta<F> {
    /// Normalized over global topics.
    pub global: Vec<F>,
    /// Normalized over local topics.
    pub local: Vec<F>,
    /// Probability that a token of this sentence is global; `1 - global_mass`
    /// is the local share.
    pub global_mass: F,
    pub local_mass: F,
}

impl<F: Scalar> MgldaState<F> {
    /// Point estimate of `phi` from the current sample:
    /// row `z` is `n^{r,z}_w + beta^r` normalized over words.
    pub fn estimate_phi(&self) -> TopicModel<F> {
        let c = &self.counts;
        let w = c.vocab_size;
        let rows = |k: usize, table: &[u32], beta: F| -> Vec<Vec<F>> {
            (0..k)
                .map(|z| {
                    let mut row: Vec<F> = (0..w)
                        .map(|word| F::from_count(table[word * k + z]) + beta)
                        .collect();
                    normalize(&mut row);
                    row
                })
                .collect()
        };
        TopicModel {
            phi_global: rows(c.k_global, &c.word_global, self.hyper.beta_gl),
            phi_local: rows(c.k_local, &c.word_local, self.hyper.beta_loc),
        }
    }

    /// Sums the window, granularity and topic factors over the `T` windows
    /// covering sentence `s` of document `d`.
    pub fn estimate_theta_sentence(&self, d: usize, s: usize) -> Result<SentenceTheta<F>> {
        let doc = self.corpus.document(d).ok_or(Error::DocOutOfRange {
            index: d,
            len: self.corpus.len(),
        })?;
        if s >= doc.sentences.len() {
            return Err(Error::SentenceOutOfRange {
                index: s,
                len: doc.sentences.len(),
            });
        }
        let c = &self.counts;
        let p = &self.priors;
        let n = F::from_count;
        let (kg, kl, t) = (c.k_global, c.k_local, c.window);
        let g = &self.geometry;
        let sg = g.sentence(d, s);

        let sentence_den = n(c.sentence_total[sg]) + p.t_gamma;
        let mut global_mass = F::zero();
        let mut local_mass = F::zero();
        let mut local = vec![F::zero(); kl];
        for o in 0..t {
            let v = g.window_of(d, s, o);
            let window = (n(c.sentence_window[sg * t + o]) + p.gamma) / sentence_den;
            let mix_den = n(c.window_total[v]) + p.mix_sum;
            let to_gl = window * (n(c.window_global[v]) + p.mix_gl) / mix_den;
            let to_loc = window * (n(c.window_local[v]) + p.mix_loc) / mix_den;
            global_mass = global_mass + to_gl;
            local_mass = local_mass + to_loc;
            let loc_den = n(c.window_local[v]) + p.k_alpha_loc;
            for (z, acc) in local.iter_mut().enumerate() {
                let topic = (n(c.window_local_topic[v * kl + z]) + p.alpha_loc) / loc_den;
                *acc = *acc + to_loc * topic;
            }
        }

        // The global topic factor is per document, so the window sum only
        // scales it by `global_mass`.
        let doc_den = n(c.doc_global[d]) + p.k_alpha_gl;
        let mut global: Vec<F> = (0..kg)
            .map(|z| (n(c.doc_global_topic[d * kg + z]) + p.alpha_gl) / doc_den)
            .collect();
        normalize(&mut global);
        normalize(&mut local);
        Ok(SentenceTheta {
            global,
            local,
            global_mass,
            local_mass,
        })
    }
}
