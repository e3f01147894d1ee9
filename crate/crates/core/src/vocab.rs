//! Capped unigram vocabulary and sparse bag-of-words counts.
//!
//! Terms whose document frequency exceeds `max_df_ratio · n_docs` are
//! dropped first; the `max_terms` most frequent survivors (by total count,
//! ties broken lexicographically) are kept and indexed in that order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::textprep::TokenizedDoc;

pub const DEFAULT_MAX_TERMS: usize = 3000;
pub const DEFAULT_MAX_DF_RATIO: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VocabError {
    #[error("cannot build a vocabulary from an empty document collection")]
    EmptyCorpus,
    #[error("invalid vocabulary parameter: {0}")]
    InvalidParameter(String),
    #[error("vocabulary file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    pub term: String,
    pub tf: u64,
    pub df: u64,
}

/// Per-term total and document frequencies. Partial counts from separate
/// partitions combine with [`TermCounts::merge`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermCounts {
    n_docs: u64,
    counts: HashMap<String, (u64, u64)>,
}

impl TermCounts {
    pub fn add_doc(&mut self, tokens: &[String]) {
        self.n_docs += 1;
        let mut seen: Vec<&str> = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let entry = self.counts.entry(tok.clone()).or_default();
            entry.0 += 1;
            if !seen.contains(&tok.as_str()) {
                seen.push(tok);
                entry.1 += 1;
            }
        }
    }

    pub fn merge(&mut self, other: TermCounts) {
        self.n_docs += other.n_docs;
        for (term, (tf, df)) in other.counts {
            let e = self.counts.entry(term).or_default();
            e.0 += tf;
            e.1 += df;
        }
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn into_vocabulary(self, max_terms: usize, max_df_ratio: f64) -> Result<Vocabulary, VocabError> {
        if self.n_docs == 0 {
            return Err(VocabError::EmptyCorpus);
        }
        check_params(max_terms, max_df_ratio)?;
        let df_cap = max_df_ratio * self.n_docs as f64;
        let mut terms: Vec<TermStats> = self
            .counts
            .into_iter()
            .filter(|(_, (_, df))| (*df as f64) <= df_cap)
            .map(|(term, (tf, df))| TermStats { term, tf, df })
            .collect();
        terms.sort_by(|a, b| b.tf.cmp(&a.tf).then_with(|| a.term.cmp(&b.term)));
        terms.truncate(max_terms);
        Ok(Vocabulary::from_parts(self.n_docs, max_terms, max_df_ratio, terms))
    }
}

fn check_params(max_terms: usize, max_df_ratio: f64) -> Result<(), VocabError> {
    if max_terms == 0 {
        return Err(VocabError::InvalidParameter("max_terms must be at least 1".into()));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(VocabError::InvalidParameter(format!(
            "max_df_ratio must be in (0, 1], got {max_df_ratio}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    n_docs: u64,
    max_terms: usize,
    max_df_ratio: f64,
    terms: Vec<TermStats>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    n_docs: u64,
    max_terms: usize,
    max_df_ratio: f64,
    terms: Vec<TermStats>,
}

impl Vocabulary {
    fn from_parts(n_docs: u64, max_terms: usize, max_df_ratio: f64, terms: Vec<TermStats>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.term.clone(), i as u32))
            .collect();
        Vocabulary {
            n_docs,
            max_terms,
            max_df_ratio,
            terms,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn max_df_ratio(&self) -> f64 {
        self.max_df_ratio
    }

    pub fn terms(&self) -> &[TermStats] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> Option<&str> {
        self.terms.get(index as usize).map(|t| t.term.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VocabularyFile {
            n_docs: self.n_docs,
            max_terms: self.max_terms,
            max_df_ratio: self.max_df_ratio,
            terms: self.terms.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        let file: VocabularyFile =
            serde_json::from_str(text).map_err(|e| VocabError::Format(e.to_string()))?;
        check_params(file.max_terms, file.max_df_ratio)?;
        let vocab = Vocabulary::from_parts(file.n_docs, file.max_terms, file.max_df_ratio, file.terms);
        if vocab.index.len() != vocab.terms.len() {
            return Err(VocabError::Format("duplicate terms".into()));
        }
        if vocab.terms.len() > vocab.max_terms {
            return Err(VocabError::Format("more terms than max_terms".into()));
        }
        Ok(vocab)
    }
}

pub fn build_vocabulary(
    docs: &[TokenizedDoc],
    max_terms: usize,
    max_df_ratio: f64,
) -> Result<Vocabulary, VocabError> {
    let mut counts = TermCounts::default();
    for doc in docs {
        counts.add_doc(&doc.tokens);
    }
    counts.into_vocabulary(max_terms, max_df_ratio)
}

/// Sparse term counts over a vocabulary, sorted by index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseCounts {
    entries: Vec<(u32, u32)>,
    dimension: usize,
}

impl SparseCounts {
    /// Builds counts from `(index, count)` pairs; zero counts are dropped and
    /// repeated indices are summed.
    pub fn from_pairs(
        dimension: usize,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Option<Self> {
        let mut entries: Vec<(u32, u32)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        if entries.iter().any(|&(i, _)| i as usize >= dimension) {
            return None;
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        entries.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        Some(SparseCounts { entries, dimension })
    }

    pub fn empty(dimension: usize) -> Self {
        SparseCounts {
            entries: Vec::new(),
            dimension,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn get(&self, index: u32) -> u32 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0, |pos| self.entries[pos].1)
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }
}

pub fn bow_vector(doc: &TokenizedDoc, vocab: &Vocabulary) -> SparseCounts {
    let pairs = doc.tokens.iter().filter_map(|t| vocab.index_of(t)).map(|i| (i, 1));
    SparseCounts::from_pairs(vocab.len(), pairs).expect("vocabulary indices are in range")
}
