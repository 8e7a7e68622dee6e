use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

use super::{Assignment, Granularity};

/// Index arithmetic for sentences and sliding windows across the whole corpus.
///
/// A document with `S` sentences owns `S + T - 1` windows; sentence `s` is
/// covered by windows `s..s + T`, so offset `o` selects window `s + o`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geometry {
    window: usize,
    sentence_base: Vec<usize>,
    window_base: Vec<usize>,
}

impl Geometry {
    pub fn new(corpus: &Corpus, window: usize) -> Self {
        let mut sentence_base = Vec::with_capacity(corpus.len() + 1);
        let mut window_base = Vec::with_capacity(corpus.len() + 1);
        let (mut s, mut v) = (0, 0);
        for doc in corpus.documents() {
            sentence_base.push(s);
            window_base.push(v);
            s += doc.sentences.len();
            v += doc.sentences.len() + window - 1;
        }
        sentence_base.push(s);
        window_base.push(v);
        Self {
            window,
            sentence_base,
            window_base,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn num_documents(&self) -> usize {
        self.sentence_base.len() - 1
    }

    pub fn num_sentences(&self) -> usize {
        *self.sentence_base.last().unwrap()
    }

    pub fn num_windows(&self) -> usize {
        *self.window_base.last().unwrap()
    }

    pub fn windows_in(&self, d: usize) -> usize {
        self.window_base[d + 1] - self.window_base[d]
    }

    /// Corpus-wide sentence index.
    #[inline]
    pub fn sentence(&self, d: usize, s: usize) -> usize {
        self.sentence_base[d] + s
    }

    /// Corpus-wide window index for sentence `s` of document `d` at offset `o`.
    #[inline]
    pub fn window_of(&self, d: usize, s: usize, o: usize) -> usize {
        self.window_base[d] + s + o
    }

    pub fn window_range(&self, d: usize) -> std::ops::Range<usize> {
        self.window_base[d]..self.window_base[d + 1]
    }
}

/// All sufficient statistics of the collapsed MG-LDA sampler.
///
/// Word-topic tables are word-major (`w * K + z`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTables {
    pub k_global: usize,
    pub k_local: usize,
    pub window: usize,
    pub vocab_size: usize,
    /// `n^{gl,z}_w`
    pub word_global: Vec<u32>,
    /// `n^{loc,z}_w`
    pub word_local: Vec<u32>,
    /// `n^{gl,z}`
    pub topic_global: Vec<u32>,
    /// `n^{loc,z}`
    pub topic_local: Vec<u32>,
    /// `n^{d,s}_v`, indexed by sentence then offset.
    pub sentence_window: Vec<u32>,
    /// `n^{d,s}`
    pub sentence_total: Vec<u32>,
    /// `n^{d,v}`
    pub window_total: Vec<u32>,
    /// `n^{d,v}_{gl}`
    pub window_global: Vec<u32>,
    /// `n^{d,v}_{loc}`
    pub window_local: Vec<u32>,
    /// `n^{d,v}_{loc,z}`, indexed by window then topic.
    pub window_local_topic: Vec<u32>,
    /// `n^d_{gl,z}`, indexed by document then topic.
    pub doc_global_topic: Vec<u32>,
    /// `n^d_{gl}`
    pub doc_global: Vec<u32>,
}

impl CountTables {
    pub fn zeros(
        geometry: &Geometry,
        k_global: usize,
        k_local: usize,
        vocab_size: usize,
    ) -> Self {
        let t = geometry.window();
        let ns = geometry.num_sentences();
        let nv = geometry.num_windows();
        let nd = geometry.num_documents();
        Self {
            k_global,
            k_local,
            window: t,
            vocab_size,
            word_global: vec![0; vocab_size * k_global],
            word_local: vec![0; vocab_size * k_local],
            topic_global: vec![0; k_global],
            topic_local: vec![0; k_local],
            sentence_window: vec![0; ns * t],
            sentence_total: vec![0; ns],
            window_total: vec![0; nv],
            window_global: vec![0; nv],
            window_local: vec![0; nv],
            window_local_topic: vec![0; nv * k_local],
            doc_global_topic: vec![0; nd * k_global],
            doc_global: vec![0; nd],
        }
    }

    /// Brute recount from an assignment array.
    pub fn recount(
        corpus: &Corpus,
        geometry: &Geometry,
        k_global: usize,
        k_local: usize,
        assignments: &[Vec<Assignment>],
    ) -> Self {
        let mut t = Self::zeros(geometry, k_global, k_local, corpus.vocab_size());
        for (d, doc) in corpus.documents().iter().enumerate() {
            let mut i = 0;
            for (s, sentence) in doc.sentences.iter().enumerate() {
                for &w in &sentence.tokens {
                    t.add(geometry, d, s, w as usize, assignments[d][i]);
                    i += 1;
                }
            }
        }
        t
    }

    #[inline]
    pub fn add(&mut self, g: &Geometry, d: usize, s: usize, w: usize, a: Assignment) {
        self.apply(g, d, s, w, a, true);
    }

    #[inline]
    pub fn remove(&mut self, g: &Geometry, d: usize, s: usize, w: usize, a: Assignment) {
        self.apply(g, d, s, w, a, false);
    }

    #[inline]
    fn apply(&mut self, g: &Geometry, d: usize, s: usize, w: usize, a: Assignment, inc: bool) {
        #[inline(always)]
        fn bump(x: &mut u32, inc: bool) {
            if inc {
                *x += 1;
            } else {
                debug_assert!(*x > 0, "count underflow");
                *x -= 1;
            }
        }
        let o = a.offset as usize;
        let z = a.topic as usize;
        let sg = g.sentence(d, s);
        let v = g.window_of(d, s, o);
        bump(&mut self.sentence_window[sg * self.window + o], inc);
        bump(&mut self.sentence_total[sg], inc);
        bump(&mut self.window_total[v], inc);
        match a.granularity {
            Granularity::Global => {
                bump(&mut self.word_global[w * self.k_global + z], inc);
                bump(&mut self.topic_global[z], inc);
                bump(&mut self.window_global[v], inc);
                bump(&mut self.doc_global_topic[d * self.k_global + z], inc);
                bump(&mut self.doc_global[d], inc);
            }
            Granularity::Local => {
                bump(&mut self.word_local[w * self.k_local + z], inc);
                bump(&mut self.topic_local[z], inc);
                bump(&mut self.window_local[v], inc);
                bump(&mut self.window_local_topic[v * self.k_local + z], inc);
            }
        }
    }

    /// Checks the arithmetic relations between tables (not against assignments).
    pub fn internally_consistent(&self) -> bool {
        let t = self.window;
        let sums_sentences = self
            .sentence_total
            .iter()
            .enumerate()
            .all(|(sg, &n)| self.sentence_window[sg * t..(sg + 1) * t].iter().sum::<u32>() == n);
        let split_windows = (0..self.window_total.len())
            .all(|v| self.window_global[v] + self.window_local[v] == self.window_total[v]);
        let local_windows = (0..self.window_total.len()).all(|v| {
            self.window_local_topic[v * self.k_local..(v + 1) * self.k_local]
                .iter()
                .sum::<u32>()
                == self.window_local[v]
        });
        let docs = (0..self.doc_global.len()).all(|d| {
            self.doc_global_topic[d * self.k_global..(d + 1) * self.k_global]
                .iter()
                .sum::<u32>()
                == self.doc_global[d]
        });
        let topics_gl = (0..self.k_global).all(|z| {
            (0..self.vocab_size)
                .map(|w| self.word_global[w * self.k_global + z])
                .sum::<u32>()
                == self.topic_global[z]
        });
        let topics_loc = (0..self.k_local).all(|z| {
            (0..self.vocab_size)
                .map(|w| self.word_local[w * self.k_local + z])
                .sum::<u32>()
                == self.topic_local[z]
        });
        sums_sentences && split_windows && local_windows && docs && topics_gl && topics_loc
    }

    #[inline]
    pub fn word_global(&self, z: usize, w: usize) -> u32 {
        self.word_global[w * self.k_global + z]
    }

    #[inline]
    pub fn word_local(&self, z: usize, w: usize) -> u32 {
        self.word_local[w * self.k_local + z]
    }
}
