//! Text preprocessing, vocabulary interning, stream I/O, and synthetic
//! stream generation.
//!
//! A raw record is cleansed (tokenize, lowercase, stopword removal,
//! optional suffix stemming) and interned into a [`Document`] whose
//! tokens are dense [`TermId`]s. Preprocessing is deterministic and
//! order-preserving: re-running on the same input yields identical
//! token sequences.

mod stream;
mod synth;

pub use stream::{read_stream, write_stream, JsonlReader, ParsePolicy, RawRecord, StreamError};
pub use synth::{generate_synthetic, DriftPoint, LabelMode, SynthError, SynthSpec};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{LabelId, TermId};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document frequency is zero: tf-idf undefined")]
    ZeroDocFrequency,
}

/// Bidirectional term-string <-> [`TermId`] map. Ids are dense from 0 in
/// first-seen order; interning is single-writer.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    by_term: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.by_term.get(term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.to_string());
        self.by_term.insert(term.to_string(), id);
        id
    }

    pub fn get(&self, term: &str) -> Option<TermId> {
        self.by_term.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id.0 as usize).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Rebuilds the reverse map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.by_term = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
    }
}

/// Label-string <-> [`LabelId`] map, same contract as [`Vocabulary`].
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
    #[serde(skip)]
    by_name: HashMap<String, LabelId>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> LabelId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = LabelId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<LabelId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: LabelId) -> Option<&str> {
        self.names.get(id.0 as usize).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn rebuild_index(&mut self) {
        self.by_name = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), LabelId(i as u32)))
            .collect();
    }
}

/// An interned document: ordered tokens plus per-term counts.
///
/// Invariants: the counts sum to `tokens.len()`, and every counted term
/// occurs in `tokens`. An empty text yields an empty document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<TermId>,
    /// Sorted by term id; houses both the per-term counts and the
    /// document vocabulary.
    pub term_counts: Vec<(TermId, u32)>,
    pub labels: BTreeSet<LabelId>,
    /// Stream index at which the document arrived.
    pub arrival: u64,
}

impl Document {
    /// Total token count of the document.
    pub fn token_total(&self) -> u32 {
        self.tokens.len() as u32
    }

    /// Number of distinct terms.
    pub fn distinct_terms(&self) -> usize {
        self.term_counts.len()
    }

    pub fn count_of(&self, term: TermId) -> u32 {
        match self.term_counts.binary_search_by_key(&term, |&(t, _)| t) {
            Ok(i) => self.term_counts[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, term: TermId) -> bool {
        self.count_of(term) > 0
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    #[cfg(debug_assertions)]
    pub(crate) fn assert_invariants(&self) {
        let total: u32 = self.term_counts.iter().map(|&(_, c)| c).sum();
        debug_assert_eq!(total, self.token_total());
        for &(t, _) in &self.term_counts {
            debug_assert!(self.tokens.contains(&t));
        }
    }
}

/// Preprocessing switches, fixed for a run.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stem: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: default_stopwords(),
            stem: false,
        }
    }
}

impl PreprocessConfig {
    /// No lowercasing, no stopwords, no stemming.
    pub fn raw() -> Self {
        Self {
            lowercase: false,
            stopwords: BTreeSet::new(),
            stem: false,
        }
    }
}

/// A small default English stopword list; replaceable via
/// [`PreprocessConfig::stopwords`].
pub fn default_stopwords() -> BTreeSet<String> {
    const WORDS: &[&str] = &[
        "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "did", "do",
        "does", "for", "from", "had", "has", "have", "he", "her", "his", "i", "if", "in",
        "into", "is", "it", "its", "me", "my", "no", "not", "of", "on", "or", "our", "she",
        "so", "such", "that", "the", "their", "them", "then", "there", "these", "they",
        "this", "those", "to", "too", "was", "we", "were", "what", "when", "which", "who",
        "will", "with", "you", "your",
    ];
    WORDS.iter().map(|w| w.to_string()).collect()
}

/// Loads one stopword per line, ignoring blanks and `#` comments.
pub fn load_stopwords(path: &std::path::Path) -> std::io::Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect())
}

/// Cleanses and interns one raw record.
///
/// Tokens are split on non-alphanumeric boundaries, optionally
/// lowercased and stemmed, filtered against the stopword list, and
/// interned in order. Labels are interned into `labels`.
pub fn preprocess(
    raw: &RawRecord,
    cfg: &PreprocessConfig,
    vocab: &mut Vocabulary,
    labels: &mut LabelSet,
    arrival: u64,
) -> Document {
    let mut tokens = Vec::new();
    for piece in raw
        .text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|p| !p.is_empty())
    {
        let mut tok = if cfg.lowercase {
            piece.to_lowercase()
        } else {
            piece.to_string()
        };
        if cfg.stopwords.contains(&tok) {
            continue;
        }
        if cfg.stem {
            tok = stem(&tok);
            if cfg.stopwords.contains(&tok) {
                continue;
            }
        }
        tokens.push(vocab.intern(&tok));
    }

    let mut counts: HashMap<TermId, u32> = HashMap::new();
    for &t in &tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut term_counts: Vec<(TermId, u32)> = counts.into_iter().collect();
    term_counts.sort_unstable_by_key(|&(t, _)| t);

    let label_ids = raw.labels.iter().map(|l| labels.intern(l)).collect();

    let doc = Document {
        id: raw.id.clone(),
        tokens,
        term_counts,
        labels: label_ids,
        arrival,
    };
    #[cfg(debug_assertions)]
    doc.assert_invariants();
    doc
}

/// TF-IDF weight of a term in a document: `count * (1 + ln(D / df))`.
///
/// `doc_count` is the corpus size and `doc_freq` the number of documents
/// containing the term; a zero document frequency is undefined.
pub fn tf_idf(
    term: TermId,
    doc: &Document,
    doc_count: u64,
    doc_freq: u64,
) -> Result<f64, CorpusError> {
    if doc_freq == 0 {
        return Err(CorpusError::ZeroDocFrequency);
    }
    let count = doc.count_of(term);
    if count == 0 {
        return Ok(0.0);
    }
    Ok(count as f64 * (1.0 + (doc_count as f64 / doc_freq as f64).ln()))
}

/// A compact suffix-stripping stemmer covering the common English
/// inflections (plurals, -ed/-ing, and a few derivational endings).
/// Deliberately conservative: short stems are left alone.
pub fn stem(word: &str) -> String {
    let mut w = word.to_string();
    if w.len() <= 3 {
        return w;
    }

    // plural forms
    if w.ends_with("sses") {
        w.truncate(w.len() - 2);
    } else if w.ends_with("ies") && w.len() > 4 {
        w.truncate(w.len() - 3);
        w.push('y');
    } else if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        w.truncate(w.len() - 1);
    }

    // -ed / -ing
    if w.ends_with("ing") && w.len() > 6 {
        w.truncate(w.len() - 3);
        undouble(&mut w);
    } else if w.ends_with("ed") && w.len() > 5 {
        w.truncate(w.len() - 2);
        undouble(&mut w);
    }

    // a few derivational endings
    for (suffix, replacement) in [
        ("ization", "ize"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("iveness", "ive"),
        ("ational", "ate"),
        ("tional", "tion"),
        ("alism", "al"),
        ("ment", ""),
        ("ness", ""),
    ] {
        if w.ends_with(suffix) && w.len() - suffix.len() + replacement.len() >= 3 {
            w.truncate(w.len() - suffix.len());
            w.push_str(replacement);
            break;
        }
    }
    w
}

fn undouble(w: &mut String) {
    let b = w.as_bytes();
    let n = b.len();
    if n >= 4 && b[n - 1] == b[n - 2] && !matches!(b[n - 1], b'l' | b's' | b'z') {
        w.truncate(n - 1);
    }
}
