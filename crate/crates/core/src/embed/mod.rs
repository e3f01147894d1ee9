//! Word embeddings trained with skip-gram and negative sampling, and the
//! per-tweet bag-of-embeddings built from them.
//!
//! A tweet's dense feature is the arithmetic mean of the input vectors of
//! its in-vocabulary tokens, or the zero vector when it has none.

mod io;
mod train;

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::textprep::TokenizedDoc;

pub use train::{sgns_loss_and_grad, train_embeddings, SgnsGradient};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("no term reaches min_count; the embedding vocabulary is empty")]
    EmptyVocabulary,
    #[error("term `{0}` is not in the embedding vocabulary")]
    TermNotFound(String),
    #[error("invalid embedding parameter: {0}")]
    InvalidParameter(String),
    #[error("embedding model file: {0}")]
    Format(#[from] std::io::Error),
}

/// Training hyperparameters. `workers > 1` selects lock-free parallel
/// training, which is not reproducible run to run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub dims: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub learning_rate: f32,
    /// Frequent-word subsampling threshold; `None` keeps every token.
    pub subsample: Option<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dims: 100,
            window: 2,
            epochs: 10,
            negatives: 5,
            min_count: 5,
            learning_rate: 0.025,
            subsample: None,
            seed: 1,
            workers: 1,
        }
    }
}

impl EmbedConfig {
    fn validate(&self) -> Result<(), EmbedError> {
        let bad = |what: &str| Err(EmbedError::InvalidParameter(what.to_string()));
        if self.dims == 0 {
            return bad("dims must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if let Some(s) = self.subsample {
            if !(s.is_finite() && s > 0.0) {
                return bad("subsample threshold must be positive");
            }
        }
        Ok(())
    }
}

/// A per-tweet dense feature block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector(Vec<f32>);

impl DenseVector {
    pub fn new(components: Vec<f32>) -> Self {
        DenseVector(components)
    }

    pub fn zeros(dims: usize) -> Self {
        DenseVector(vec![0.0; dims])
    }

    pub fn components(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: EmbedConfig,
    terms: Vec<(String, u64)>,
    index: HashMap<String, u32>,
    input: Vec<f32>,
    output: Vec<f32>,
}

impl EmbeddingModel {
    pub(crate) fn from_parts(
        config: EmbedConfig,
        terms: Vec<(String, u64)>,
        input: Vec<f32>,
        output: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(input.len(), terms.len() * config.dims);
        debug_assert_eq!(output.len(), terms.len() * config.dims);
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        EmbeddingModel {
            config,
            terms,
            index,
            input,
            output,
        }
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.config.dims
    }

    pub fn vocab_len(&self) -> usize {
        self.terms.len()
    }

    /// Vocabulary terms with their training-corpus counts, in index order.
    pub fn terms(&self) -> &[(String, u64)] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn input_vector(&self, term: &str) -> Option<&[f32]> {
        self.index_of(term).map(|i| self.input_row(i as usize))
    }

    pub fn output_vector(&self, term: &str) -> Option<&[f32]> {
        self.index_of(term).map(|i| self.output_row(i as usize))
    }

    fn input_row(&self, i: usize) -> &[f32] {
        let d = self.config.dims;
        &self.input[i * d..(i + 1) * d]
    }

    fn output_row(&self, i: usize) -> &[f32] {
        let d = self.config.dims;
        &self.output[i * d..(i + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub fn boe_vector(doc: &TokenizedDoc, model: &EmbeddingModel) -> DenseVector {
    let dims = model.dims();
    let mut sum = vec![0.0f64; dims];
    let mut n = 0usize;
    for tok in &doc.tokens {
        if let Some(i) = model.index_of(tok) {
            for (s, &v) in sum.iter_mut().zip(model.input_row(i as usize)) {
                *s += v as f64;
            }
            n += 1;
        }
    }
    if n == 0 {
        return DenseVector::zeros(dims);
    }
    DenseVector(sum.into_iter().map(|s| (s / n as f64) as f32).collect())
}

/// The `k` terms closest to `term` by cosine of input vectors, excluding
/// the term itself. Ties are broken lexicographically.
pub fn nearest_neighbors(
    term: &str,
    k: usize,
    model: &EmbeddingModel,
) -> Result<Vec<(String, f64)>, EmbedError> {
    let query = model
        .index_of(term)
        .ok_or_else(|| EmbedError::TermNotFound(term.to_string()))? as usize;
    let qv = model.input_row(query);
    let mut scored: Vec<(&str, f64)> = (0..model.vocab_len())
        .filter(|&i| i != query)
        .map(|i| (model.terms[i].0.as_str(), cosine(qv, model.input_row(i))))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);
    Ok(scored.into_iter().map(|(t, s)| (t.to_string(), s)).collect())
}
