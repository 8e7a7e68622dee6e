//! Review text ingestion: sentence splitting, tokenization and integer encoding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default number of rating levels (1..=5).
pub const DEFAULT_RATING_LEVELS: u32 = 5;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary term `{t}`")));
            }
        }
        Ok(Self { terms, index })
    }

    /// Returns the id of `term`, assigning the next dense id on first sight.
    pub fn intern(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term.to_owned());
        self.index.insert(term.to_owned(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// SHA-256 over the newline-joined term list, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.terms {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<u32>,
    /// Byte offsets of the sentence in the original text.
    pub span: (usize, usize),
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<BTreeMap<String, u32>>,
}

impl Document {
    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = u32> + '_ {
        self.sentences.iter().flat_map(|s| s.tokens.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
}

/// Immutable integer-encoded corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    stats: CorpusStats,
    rating_levels: u32,
}

impl Corpus {
    /// Assembles a corpus from already encoded documents, checking every invariant.
    pub fn from_parts(
        documents: Vec<Document>,
        vocabulary: Vocabulary,
        rating_levels: u32,
    ) -> Result<Self> {
        let mut corpus = Corpus {
            documents,
            vocabulary,
            stats: CorpusStats::default(),
            rating_levels,
        };
        corpus.stats = corpus.recount_stats();
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, d: usize) -> Option<&Document> {
        self.documents.get(d)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn rating_levels(&self) -> u32 {
        self.rating_levels
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn recount_stats(&self) -> CorpusStats {
        CorpusStats {
            documents: self.documents.len(),
            sentences: self.documents.iter().map(|d| d.sentences.len()).sum(),
            tokens: self.documents.iter().map(Document::num_tokens).sum(),
        }
    }

    /// Aspect names taken from the first rated document. The six hotel
    /// aspects come first in their conventional order, any others follow
    /// sorted by name.
    pub fn aspects(&self) -> Vec<String> {
        let Some(ratings) = self.documents.iter().find_map(|d| d.ratings.as_ref()) else {
            return Vec::new();
        };
        let mut names: Vec<String> = ratings.keys().cloned().collect();
        let rank = |a: &String| {
            crate::synth::HOTEL_ASPECTS
                .iter()
                .position(|h| h == a)
                .unwrap_or(usize::MAX)
        };
        names.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
        names
    }

    pub fn validate(&self) -> Result<()> {
        if self.documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let w = self.vocabulary.len() as u32;
        let mut seen = HashSet::new();
        for doc in &self.documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocId(doc.id.clone()));
            }
            if let Some(tok) = doc.tokens().find(|&t| t >= w) {
                return Err(Error::Invalid(format!(
                    "document `{}` has token id {tok} >= vocabulary size {w}",
                    doc.id
                )));
            }
            if let Some(ratings) = &doc.ratings {
                for &r in ratings.values() {
                    if r < 1 || r > self.rating_levels {
                        return Err(Error::RatingOutOfRange {
                            rating: r,
                            k: self.rating_levels,
                        });
                    }
                }
            }
        }
        if self.stats != self.recount_stats() {
            return Err(Error::Invalid("corpus stats disagree with documents".into()));
        }
        Ok(())
    }

    /// Re-derives the term index after deserialization and checks invariants.
    pub fn finish_load(mut self) -> Result<Self> {
        self.vocabulary.rebuild_index();
        if self.vocabulary.index.len() != self.vocabulary.terms.len() {
            return Err(Error::Invalid("duplicate vocabulary terms".into()));
        }
        self.validate()?;
        Ok(self)
    }
}

/// One line of the JSON-lines input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<BTreeMap<String, u32>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub kept: usize,
    pub dropped: Vec<String>,
    pub vocab_size: usize,
    pub sentences: usize,
    pub tokens: usize,
}

impl std::fmt::Display for IngestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "documents kept\t{}", self.kept)?;
        writeln!(f, "documents dropped\t{}", self.dropped.len())?;
        writeln!(f, "vocabulary size\t{}", self.vocab_size)?;
        writeln!(f, "sentences\t{}", self.sentences)?;
        write!(f, "tokens\t{}", self.tokens)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits `text` into byte spans that tile the input exactly.
///
/// A boundary is placed after a run of `.`, `!` or `?` that is followed by
/// whitespace; the whitespace run belongs to the preceding span. A period right
/// after a lone capital letter ("J. Smith") does not end a sentence.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if is_terminal(c) {
            let mut j = i;
            while j + 1 < chars.len() && is_terminal(chars[j + 1].1) {
                j += 1;
            }
            let followed_by_space = j + 1 < chars.len() && chars[j + 1].1.is_whitespace();
            if followed_by_space && !(j == i && c == '.' && is_initial(&chars, i)) {
                let mut k = j + 1;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                let end = chars.get(k).map_or(text.len(), |&(b, _)| b);
                spans.push((start, end));
                start = end;
                i = k;
                continue;
            }
            i = j + 1;
            continue;
        }
        i += 1;
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

// `.` at position `i` closes a single capital letter preceded by whitespace or
// the start of text.
fn is_initial(chars: &[(usize, char)], i: usize) -> bool {
    if i == 0 {
        return false;
    }
    let prev = chars[i - 1].1;
    prev.is_uppercase() && (i == 1 || !chars[i - 2].1.is_alphanumeric())
}

fn trimmed_span(text: &str, (s, e): (usize, usize)) -> Option<(usize, usize)> {
    let slice = &text[s..e];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some((s + lead, s + lead + trimmed.len()))
    }
}

/// Sentence strings with surrounding whitespace removed; whitespace-only
/// segments are skipped.
pub fn sentence_split(text: &str) -> Vec<&str> {
    sentence_spans(text)
        .into_iter()
        .filter_map(|sp| trimmed_span(text, sp))
        .map(|(s, e)| &text[s..e])
        .collect()
}

/// Lowercased alphanumeric tokens with stopwords removed. Numbers are kept.
pub fn tokenize(sentence: &str, stopwords: &HashSet<String>) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Builds a corpus with the default five rating levels.
pub fn build_corpus(
    docs: Vec<RawDocument>,
    stopwords: &HashSet<String>,
) -> Result<(Corpus, IngestReport)> {
    build_corpus_with_levels(docs, stopwords, DEFAULT_RATING_LEVELS)
}

pub fn build_corpus_with_levels(
    docs: Vec<RawDocument>,
    stopwords: &HashSet<String>,
    rating_levels: u32,
) -> Result<(Corpus, IngestReport)> {
    let mut ids = HashSet::with_capacity(docs.len());
    for d in &docs {
        if !ids.insert(d.id.as_str()) {
            return Err(Error::DuplicateDocId(d.id.clone()));
        }
    }

    let mut vocabulary = Vocabulary::new();
    let mut documents = Vec::with_capacity(docs.len());
    let mut dropped = Vec::new();
    for raw in docs {
        let mut sentences = Vec::new();
        for span in sentence_spans(&raw.text) {
            let Some(span) = trimmed_span(&raw.text, span) else {
                continue;
            };
            let words = tokenize(&raw.text[span.0..span.1], stopwords);
            sentences.push((words, span));
        }
        if sentences.iter().all(|(w, _)| w.is_empty()) {
            dropped.push(raw.id);
            continue;
        }
        let sentences = sentences
            .into_iter()
            .map(|(words, span)| Sentence {
                tokens: words.iter().map(|w| vocabulary.intern(w)).collect(),
                span,
            })
            .collect();
        documents.push(Document {
            id: raw.id,
            sentences,
            ratings: raw.ratings,
        });
    }
    if !dropped.is_empty() {
        log::warn!("dropped {} documents with no content words", dropped.len());
    }

    let corpus = Corpus::from_parts(documents, vocabulary, rating_levels)?;
    let stats = corpus.stats();
    let report = IngestReport {
        kept: stats.documents,
        dropped,
        vocab_size: corpus.vocab_size(),
        sentences: stats.sentences,
        tokens: stats.tokens,
    };
    Ok((corpus, report))
}

/// Reads JSON-lines documents; blank lines are ignored, line numbers are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

/// One term per line, lowercased; blank lines ignored.
pub fn read_stopwords<R: BufRead>(reader: R) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            set.insert(t.to_lowercase());
        }
    }
    Ok(set)
}
