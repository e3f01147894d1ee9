use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::embed::{boe_vector, DenseVector, EmbeddingModel};
use crate::textprep::TokenizedDoc;
use crate::vocab::{bow_vector, SparseCounts, Vocabulary};

/// Which feature blocks a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "bow")]
    Bow,
    #[serde(rename = "boe")]
    Boe,
    #[serde(rename = "bow+boe")]
    BowBoe,
}

impl FeatureKind {
    pub fn uses_bow(self) -> bool {
        matches!(self, FeatureKind::Bow | FeatureKind::BowBoe)
    }

    pub fn uses_boe(self) -> bool {
        matches!(self, FeatureKind::Boe | FeatureKind::BowBoe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Boe => "boe",
            FeatureKind::BowBoe => "bow+boe",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bow" => Ok(FeatureKind::Bow),
            "boe" => Ok(FeatureKind::Boe),
            "bow+boe" | "bow_boe" => Ok(FeatureKind::BowBoe),
            other => Err(format!("unknown feature set `{other}` (expected bow, boe or bow+boe)")),
        }
    }
}

/// Block layout of a feature space: sparse counts occupy `[0, vocab_dim)`,
/// the dense block `[vocab_dim, vocab_dim + embed_dim)`. A zero dimension
/// means the block is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schema {
    pub vocab_dim: usize,
    pub embed_dim: usize,
}

impl Schema {
    pub fn new(vocab_dim: usize, embed_dim: usize) -> Self {
        Schema {
            vocab_dim,
            embed_dim,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.vocab_dim + self.embed_dim
    }

    pub(crate) fn expect(&self, got: Schema) -> Result<(), ClassifyError> {
        if *self != got {
            return Err(ClassifyError::SchemaMismatch {
                expected: *self,
                found: got,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    sparse: SparseCounts,
    dense: DenseVector,
}

pub fn combine_features(
    schema: Schema,
    bow: Option<SparseCounts>,
    boe: Option<DenseVector>,
) -> Result<FeatureVector, ClassifyError> {
    let sparse = bow.unwrap_or_else(|| SparseCounts::empty(0));
    let dense = boe.unwrap_or_default();
    let found = Schema::new(sparse.dimension(), dense.len());
    schema.expect(found)?;
    if !dense.is_finite() {
        return Err(ClassifyError::InvalidParameter("non-finite dense feature".into()));
    }
    Ok(FeatureVector { sparse, dense })
}

impl FeatureVector {
    pub fn schema(&self) -> Schema {
        Schema::new(self.sparse.dimension(), self.dense.len())
    }

    pub fn sparse(&self) -> &SparseCounts {
        &self.sparse
    }

    pub fn dense(&self) -> &DenseVector {
        &self.dense
    }

    /// Visits every stored component: sparse non-zeros, then the whole
    /// dense block.
    #[inline]
    pub fn for_each<F: FnMut(usize, f64)>(&self, mut f: F) {
        for &(i, c) in self.sparse.entries() {
            f(i as usize, c as f64);
        }
        let offset = self.sparse.dimension();
        for (j, &v) in self.dense.components().iter().enumerate() {
            f(offset + j, v as f64);
        }
    }

    pub fn value(&self, index: usize) -> f32 {
        let v = self.sparse.dimension();
        if index < v {
            self.sparse.get(index as u32) as f32
        } else {
            self.dense.components().get(index - v).copied().unwrap_or(0.0)
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each(|i, x| acc += weights[i] * x);
        acc
    }

    pub fn dot_f32(&self, weights: &[f32]) -> f64 {
        let mut acc = 0.0;
        self.for_each(|i, x| acc += weights[i] as f64 * x);
        acc
    }

    /// Dense copy of all `total_dim` components.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.schema().total_dim()];
        self.for_each(|i, x| out[i] = x);
        out
    }
}

/// Turns tokenized tweets into feature vectors with whichever extractors
/// are present.
#[derive(Debug, Clone, Default)]
pub struct Featurizer {
    vocab: Option<Vocabulary>,
    embeddings: Option<EmbeddingModel>,
}

impl Featurizer {
    pub fn new(vocab: Option<Vocabulary>, embeddings: Option<EmbeddingModel>) -> Self {
        Featurizer { vocab, embeddings }
    }

    /// Keeps only the extractors `kind` asks for.
    pub fn for_kind(
        kind: FeatureKind,
        vocab: Option<Vocabulary>,
        embeddings: Option<EmbeddingModel>,
    ) -> Result<Self, ClassifyError> {
        let missing = |what: &str| ClassifyError::InvalidParameter(format!("{kind} features need {what}"));
        let vocab = if kind.uses_bow() { Some(vocab.ok_or_else(|| missing("a vocabulary"))?) } else { None };
        let embeddings = if kind.uses_boe() {
            Some(embeddings.ok_or_else(|| missing("an embedding model"))?)
        } else {
            None
        };
        Ok(Featurizer { vocab, embeddings })
    }

    pub fn schema(&self) -> Schema {
        Schema::new(
            self.vocab.as_ref().map_or(0, Vocabulary::len),
            self.embeddings.as_ref().map_or(0, EmbeddingModel::dims),
        )
    }

    pub fn vocab(&self) -> Option<&Vocabulary> {
        self.vocab.as_ref()
    }

    pub fn embeddings(&self) -> Option<&EmbeddingModel> {
        self.embeddings.as_ref()
    }

    pub fn featurize(&self, doc: &TokenizedDoc) -> FeatureVector {
        let bow = self.vocab.as_ref().map(|v| bow_vector(doc, v));
        let boe = self.embeddings.as_ref().map(|m| boe_vector(doc, m));
        combine_features(self.schema(), bow, boe).expect("featurizer output matches its own schema")
    }
}
