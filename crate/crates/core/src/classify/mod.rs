//! Feature assembly and the three classifier families.

mod features;
mod forest;
mod linear;
mod model_file;

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{combine_features, FeatureKind, FeatureVector, Featurizer, Schema};
pub use forest::{gini, train_random_forest, Bag, ForestConfig, ForestFit, ForestModel, MaxFeatures, Node, Tree};
pub use linear::{
    loss_derivative, loss_value, objective_and_grad, train_linear, LinearConfig, LinearModel, LossKind, Optimizer,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("feature schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: Schema, found: Schema },
    #[error("training data must contain both classes")]
    DegenerateLabels,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training diverged to non-finite parameters")]
    Diverged,
    #[error("model file: {0}")]
    Format(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Travel,
    NonTravel,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Travel
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Travel
        } else {
            Label::NonTravel
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Travel => "travel",
            Label::NonTravel => "non_travel",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "travel" => Ok(Label::Travel),
            "non_travel" => Ok(Label::NonTravel),
            other => Err(format!("unknown label `{other}` (expected travel or non_travel)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: Label,
    pub tweet_id: u64,
}

/// Labeled examples sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn new(schema: Schema, examples: Vec<LabeledExample>) -> Result<Self, ClassifyError> {
        for ex in &examples {
            schema.expect(ex.features.schema())?;
        }
        Ok(Dataset { schema, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label.is_positive()).count()
    }
}

pub(crate) fn check_labels(data: &Dataset) -> Result<(), ClassifyError> {
    let pos = data.positives();
    if pos == 0 || pos == data.len() {
        return Err(ClassifyError::DegenerateLabels);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Logreg,
    Rf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Logreg => "logreg",
            ModelKind::Rf => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svm" => Ok(ModelKind::Svm),
            "logreg" | "lr" => Ok(ModelKind::Logreg),
            "rf" => Ok(ModelKind::Rf),
            other => Err(format!("unknown model `{other}` (expected svm, logreg or rf)")),
        }
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Linear(LinearModel),
    Forest(ForestModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub score: f64,
    pub label: Label,
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Linear(m) => match m.loss() {
                LossKind::Hinge => ModelKind::Svm,
                LossKind::Logistic => ModelKind::Logreg,
            },
            Classifier::Forest(_) => ModelKind::Rf,
        }
    }

    pub fn schema(&self) -> Schema {
        match self {
            Classifier::Linear(m) => m.schema(),
            Classifier::Forest(m) => m.schema(),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Classifier::Linear(m) => m.threshold(),
            Classifier::Forest(m) => m.threshold(),
        }
    }

    pub fn predict_score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        match self {
            Classifier::Linear(m) => m.predict_score(x),
            Classifier::Forest(m) => m.predict_score(x),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction, ClassifyError> {
        let score = self.predict_score(x)?;
        Ok(Prediction {
            score,
            label: Label::from_positive(score > self.threshold()),
        })
    }
}

/// Scores every vector, splitting the work over `workers` threads. Output
/// order matches input order.
pub fn predict_batch(
    model: &Classifier,
    features: &[FeatureVector],
    workers: usize,
) -> Result<Vec<Prediction>, ClassifyError> {
    let schema = model.schema();
    for x in features {
        schema.expect(x.schema())?;
    }
    let workers = workers.max(1);
    if workers == 1 || features.len() < 2 * workers {
        return features.iter().map(|x| model.predict(x)).collect();
    }
    let chunk = features.len().div_ceil(workers);
    let parts: Vec<Result<Vec<Prediction>, ClassifyError>> = std::thread::scope(|s| {
        let handles: Vec<_> = features
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|x| model.predict(x)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("prediction worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(features.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::DenseVector;
    use crate::vocab::SparseCounts;

    fn example(id: u64, x: f32, c: u32, label: Label) -> LabeledExample {
        let features = combine_features(
            Schema::new(2, 1),
            Some(SparseCounts::from_pairs(2, [(0, c)]).unwrap_or_else(|| SparseCounts::empty(2))),
            Some(DenseVector::new(vec![x])),
        )
        .unwrap();
        LabeledExample {
            features,
            label,
            tweet_id: id,
        }
    }

    fn data() -> Dataset {
        let mut ex = Vec::new();
        for i in 0..50u64 {
            ex.push(example(i, i as f32 / 10.0, (i % 3) as u32, Label::Travel));
            ex.push(example(100 + i, -(i as f32) / 10.0 - 0.5, 0, Label::NonTravel));
        }
        Dataset::new(Schema::new(2, 1), ex).unwrap()
    }

    #[test]
    fn label_strings() {
        assert_eq!("travel".parse::<Label>().unwrap(), Label::Travel);
        assert_eq!(Label::NonTravel.to_string(), "non_travel");
        assert_eq!(serde_json::to_string(&Label::NonTravel).unwrap(), "\"non_travel\"");
        assert!("yes".parse::<Label>().is_err());
    }

    #[test]
    fn dataset_rejects_mixed_schemas() {
        let mut ex = data().examples;
        ex.push(LabeledExample {
            features: combine_features(Schema::new(0, 1), None, Some(DenseVector::zeros(1))).unwrap(),
            label: Label::Travel,
            tweet_id: 9,
        });
        assert!(matches!(
            Dataset::new(Schema::new(2, 1), ex),
            Err(ClassifyError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn batch_matches_loop_for_every_model() {
        let d = data();
        let models = vec![
            Classifier::Linear(train_linear(&d, &LinearConfig::svm()).unwrap()),
            Classifier::Linear(train_linear(&d, &LinearConfig::logistic()).unwrap()),
            Classifier::Forest(
                train_random_forest(
                    &d,
                    &ForestConfig {
                        n_trees: 10,
                        ..ForestConfig::default()
                    },
                )
                .unwrap()
                .model,
            ),
        ];
        let xs: Vec<_> = d.examples.iter().map(|e| e.features.clone()).collect();
        for m in &models {
            let looped: Vec<_> = xs.iter().map(|x| m.predict(x).unwrap()).collect();
            for workers in [1, 3, 8] {
                assert_eq!(predict_batch(m, &xs, workers).unwrap(), looped);
            }
            assert!(predict_batch(m, &[], 4).unwrap().is_empty());
        }
    }

    #[test]
    fn batch_rejects_wrong_schema() {
        let d = data();
        let m = Classifier::Linear(train_linear(&d, &LinearConfig::svm()).unwrap());
        let bad = combine_features(Schema::new(0, 1), None, Some(DenseVector::zeros(1))).unwrap();
        assert!(matches!(
            predict_batch(&m, &[bad], 1),
            Err(ClassifyError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn model_kind_names() {
        for k in [ModelKind::Svm, ModelKind::Logreg, ModelKind::Rf] {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
    }
}
