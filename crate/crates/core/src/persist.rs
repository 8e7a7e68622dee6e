//! Versioned on-disk formats: corpus files, trained model files and the
//! topic report.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::ModelKind;
use crate::lda::{LdaCounts, LdaParams, LdaState};
use crate::mglda::{Assignment, CountTables, Granularity, Hyperparams, MgldaState};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

/// Default number of words per topic in the topic report.
pub const DEFAULT_TOP_WORDS: usize = 12;

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusFile {
    pub format_version: u32,
    pub corpus: Corpus,
}

impl CorpusFile {
    pub fn new(corpus: Corpus) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            corpus,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Corpus> {
        let file: CorpusFile = serde_json::from_str(s)?;
        check_version(file.format_version)?;
        file.corpus.finish_load()
    }
}

/// `[offset, granularity (0 = global, 1 = local), topic]`
pub type PackedAssignment = [u32; 3];

fn pack(a: &Assignment) -> PackedAssignment {
    let r = match a.granularity {
        Granularity::Global => 0,
        Granularity::Local => 1,
    };
    [a.offset, r, a.topic]
}

fn unpack(p: &PackedAssignment) -> Result<Assignment> {
    let granularity = match p[1] {
        0 => Granularity::Global,
        1 => Granularity::Local,
        r => return Err(Error::InvalidAssignment(format!("granularity code {r}"))),
    };
    Ok(Assignment {
        offset: p[0],
        granularity,
        topic: p[2],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "F: Scalar")]
pub enum TrainedModel<F> {
    Mglda {
        hyperparams: Hyperparams<F>,
        phi_global: Vec<Vec<F>>,
        phi_local: Vec<Vec<F>>,
        counts: Box<CountTables>,
        assignments: Vec<Vec<PackedAssignment>>,
    },
    Lda {
        params: LdaParams<F>,
        phi: Vec<Vec<F>>,
        counts: LdaCounts,
        assignments: Vec<Vec<u32>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ModelFile<F> {
    pub format_version: u32,
    pub vocab_fingerprint: String,
    pub vocabulary: Vec<String>,
    pub seed: u64,
    pub iterations: usize,
    pub log_joint: F,
    #[serde(flatten)]
    pub model: TrainedModel<F>,
}

impl<F: Scalar> ModelFile<F> {
    pub fn from_mglda(state: &MgldaState<F>) -> Self {
        let tm = state.estimate_phi();
        Self {
            format_version: FORMAT_VERSION,
            vocab_fingerprint: state.corpus().vocabulary().fingerprint(),
            vocabulary: state.corpus().vocabulary().terms().to_vec(),
            seed: state.seed(),
            iterations: state.iteration(),
            log_joint: state.log_joint(),
            model: TrainedModel::Mglda {
                hyperparams: state.hyperparams().clone(),
                phi_global: tm.phi_global,
                phi_local: tm.phi_local,
                counts: Box::new(state.counts().clone()),
                assignments: state
                    .assignments()
                    .iter()
                    .map(|d| d.iter().map(pack).collect())
                    .collect(),
            },
        }
    }

    pub fn from_lda(state: &LdaState<F>) -> Self {
        let est = state.estimate();
        Self {
            format_version: FORMAT_VERSION,
            vocab_fingerprint: state.corpus().vocabulary().fingerprint(),
            vocabulary: state.corpus().vocabulary().terms().to_vec(),
            seed: state.seed(),
            iterations: state.iteration(),
            log_joint: state.log_joint(),
            model: TrainedModel::Lda {
                params: state.params().clone(),
                phi: est.phi,
                counts: state.counts().clone(),
                assignments: state.assignments().to_vec(),
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            TrainedModel::Mglda { .. } => ModelKind::Mglda,
            TrainedModel::Lda { .. } => ModelKind::Lda,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(s)?;
        check_version(file.format_version)?;
        let vocab = crate::corpus::Vocabulary::from_terms(file.vocabulary.clone())?;
        if vocab.fingerprint() != file.vocab_fingerprint {
            return Err(Error::Invalid("model vocabulary does not match its fingerprint".into()));
        }
        Ok(file)
    }

    fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.vocabulary().fingerprint() != self.vocab_fingerprint {
            return Err(Error::Invalid(
                "model was trained on a corpus with a different vocabulary".into(),
            ));
        }
        Ok(())
    }

    /// Rebuilds the sampler; the stored count tables must agree with a recount
    /// from the stored assignments.
    pub fn restore_mglda(&self, corpus: Arc<Corpus>) -> Result<MgldaState<F>> {
        self.check_corpus(&corpus)?;
        let TrainedModel::Mglda {
            hyperparams,
            counts,
            assignments,
            ..
        } = &self.model
        else {
            return Err(Error::Invalid("not an mglda model".into()));
        };
        let assignments = assignments
            .iter()
            .map(|d| d.iter().map(unpack).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let state = MgldaState::from_assignments_at(
            corpus,
            hyperparams.clone(),
            assignments,
            self.seed,
            self.iterations,
        )?;
        if state.counts() != counts.as_ref() {
            return Err(Error::Invalid("stored counts disagree with assignments".into()));
        }
        Ok(state)
    }

    pub fn restore_lda(&self, corpus: Arc<Corpus>) -> Result<LdaState<F>> {
        self.check_corpus(&corpus)?;
        let TrainedModel::Lda {
            params,
            counts,
            assignments,
            ..
        } = &self.model
        else {
            return Err(Error::Invalid("not an lda model".into()));
        };
        let state = LdaState::from_assignments_at(
            corpus,
            params.clone(),
            assignments.clone(),
            self.seed,
            self.iterations,
        )?;
        if state.counts() != counts {
            return Err(Error::Invalid("stored counts disagree with assignments".into()));
        }
        Ok(state)
    }
}

/// Top words of a topic, most probable first; ties go to the lower word id.
pub fn top_words<F: Scalar>(row: &[F], n: usize) -> Vec<(usize, F)> {
    let mut idx: Vec<(usize, F)> = row.iter().copied().enumerate().collect();
    idx.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("not NaN").then(a.0.cmp(&b.0)));
    idx.truncate(n);
    idx
}

/// One TSV row per topic: granularity tag, topic id, then `word:prob` cells.
/// LDA topics are tagged `lda`.
pub fn topic_report<F: Scalar>(model: &ModelFile<F>, n: usize) -> String {
    let corpus_terms = &model.vocabulary;
    let mut out = String::new();
    let mut emit = |tag: &str, rows: &[Vec<F>]| {
        for (z, row) in rows.iter().enumerate() {
            let _ = write!(out, "{tag}\t{z}");
            for (w, p) in top_words(row, n) {
                let term = corpus_terms.get(w).map_or("<unk>", String::as_str);
                let _ = write!(out, "\t{term}:{:.6}", p.as_f64());
            }
            out.push('\n');
        }
    };
    match &model.model {
        TrainedModel::Mglda {
            phi_global,
            phi_local,
            ..
        } => {
            emit("gl", phi_global);
            emit("loc", phi_local);
        }
        TrainedModel::Lda { phi, .. } => emit("lda", phi),
    }
    out
}
