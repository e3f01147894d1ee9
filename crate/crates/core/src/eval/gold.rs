use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::classify::{ClassifyError, Dataset, FeatureVector, Label, LabeledExample, Schema};
use crate::corpus::Tweet;
use crate::textprep::normalize;

pub const DEFAULT_TERMS: [&str; 11] = [
    "bicicleta", "moto", "onibus", "ônibus", "carro", "taxi", "táxi", "metro", "metrô", "trem", "caminhar",
];

/// Minority-class share below which a labeled set is flagged as imbalanced.
pub const IMBALANCE_THRESHOLD: f64 = 0.2;

/// Transport terms for the keyword bootstrap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermQuery {
    terms: BTreeSet<String>,
}

impl Default for TermQuery {
    fn default() -> Self {
        TermQuery::new(DEFAULT_TERMS).expect("default terms are valid")
    }
}

impl TermQuery {
    pub fn new<I, S>(terms: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for t in terms {
            let t = t.as_ref().trim();
            if t.is_empty() || t.chars().any(char::is_whitespace) || t.to_lowercase() != t {
                return Err(EvalError::InvalidTerm(t.to_string()));
            }
            set.insert(t.to_string());
        }
        if set.is_empty() {
            return Err(EvalError::EmptyQuery);
        }
        Ok(TermQuery { terms: set })
    }

    /// One term per line; blank lines and `#` comments are skipped. Terms
    /// are lowercased.
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self, EvalError> {
        let mut terms = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            terms.push(t.to_lowercase());
        }
        TermQuery::new(terms)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Whether a normalized text contains a term with whitespace or a text
    /// boundary on both sides.
    pub fn matches_normalized(&self, text: &str) -> bool {
        let padded = format!(" {} ", text.split_whitespace().collect::<Vec<_>>().join(" "));
        self.terms.iter().any(|t| padded.contains(&format!(" {t} ")))
    }

    pub fn matches(&self, raw_text: &str) -> bool {
        self.matches_normalized(&normalize(raw_text))
    }
}

/// Tweets whose normalized text mentions a query term.
pub fn bootstrap_candidates<'a, I>(tweets: I, query: &TermQuery) -> Vec<&'a Tweet>
where
    I: IntoIterator<Item = &'a Tweet>,
{
    tweets.into_iter().filter(|t| query.matches(&t.text)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRow {
    tweet_id: u64,
    label: Label,
}

/// Reads a `tweet_id,label` CSV. Repeating an id is an error.
pub fn read_annotations<R: Read>(r: R) -> Result<BTreeMap<u64, Label>, EvalError> {
    let mut out = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    for row in reader.deserialize() {
        let row: AnnotationRow = row?;
        if out.insert(row.tweet_id, row.label).is_some() {
            return Err(EvalError::DuplicateAnnotation(row.tweet_id));
        }
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(w: W, annotations: &BTreeMap<u64, Label>) -> Result<(), EvalError> {
    let mut writer = csv::Writer::from_writer(w);
    for (&tweet_id, &label) in annotations {
        writer.serialize(AnnotationRow { tweet_id, label })?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassBalance {
    pub positives: usize,
    pub negatives: usize,
    pub positive_fraction: f64,
    pub negative_fraction: f64,
    /// Set when the minority share is under [`IMBALANCE_THRESHOLD`].
    pub imbalanced: bool,
}

impl ClassBalance {
    pub fn of<'a, I: IntoIterator<Item = &'a Label>>(labels: I) -> Self {
        let (mut positives, mut negatives) = (0, 0);
        for l in labels {
            if l.is_positive() {
                positives += 1;
            } else {
                negatives += 1;
            }
        }
        let total = (positives + negatives).max(1) as f64;
        let positive_fraction = positives as f64 / total;
        let negative_fraction = negatives as f64 / total;
        ClassBalance {
            positives,
            negatives,
            positive_fraction,
            negative_fraction,
            imbalanced: positive_fraction.min(negative_fraction) < IMBALANCE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoldSet {
    pub dataset: Dataset,
    pub balance: ClassBalance,
}

/// Joins annotations onto candidate features, in ascending tweet id order.
pub fn assemble_gold(
    schema: Schema,
    candidates: &[(u64, FeatureVector)],
    annotations: &BTreeMap<u64, Label>,
) -> Result<GoldSet, EvalError> {
    let index: HashMap<u64, &FeatureVector> = candidates.iter().rev().map(|(id, f)| (*id, f)).collect();
    let mut examples = Vec::with_capacity(annotations.len());
    for (&id, &label) in annotations {
        let features = index.get(&id).ok_or(EvalError::AnnotationOrphan(id))?;
        examples.push(LabeledExample {
            features: (*features).clone(),
            label,
            tweet_id: id,
        });
    }
    let balance = ClassBalance::of(annotations.values());
    let dataset = Dataset::new(schema, examples).map_err(|e| match e {
        ClassifyError::SchemaMismatch { expected, found } => EvalError::SchemaMismatch { expected, found },
        other => EvalError::InvalidInput(other.to_string()),
    })?;
    Ok(GoldSet { dataset, balance })
}

/// Fails on the smallest id annotated in both splits.
pub fn check_disjoint(train: &BTreeMap<u64, Label>, test: &BTreeMap<u64, Label>) -> Result<(), EvalError> {
    match train.keys().find(|id| test.contains_key(id)) {
        Some(&id) => Err(EvalError::LeakageDetected(id)),
        None => Ok(()),
    }
}

/// Draws `per_class` ids of each label without replacement.
pub fn balanced_sample(
    labeled: &BTreeMap<u64, Label>,
    per_class: usize,
    seed: u64,
) -> Result<BTreeMap<u64, Label>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for label in [Label::Travel, Label::NonTravel] {
        let mut ids: Vec<u64> = labeled.iter().filter(|(_, &l)| l == label).map(|(&id, _)| id).collect();
        if ids.len() < per_class {
            return Err(EvalError::InsufficientExamples {
                label,
                wanted: per_class,
                available: ids.len(),
            });
        }
        ids.shuffle(&mut rng);
        out.extend(ids[..per_class].iter().map(|&id| (id, label)));
    }
    Ok(out)
}

/// Draws `n` ids uniformly from `pool` minus `exclude`, returned ascending.
pub fn disjoint_sample(pool: &[u64], exclude: &BTreeSet<u64>, n: usize, seed: u64) -> Result<Vec<u64>, EvalError> {
    let mut ids: Vec<u64> = pool.iter().copied().filter(|id| !exclude.contains(id)).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < n {
        return Err(EvalError::InvalidInput(format!(
            "cannot draw {n} ids from a pool of {}",
            ids.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    ids.truncate(n);
    ids.sort_unstable();
    Ok(ids)
}
