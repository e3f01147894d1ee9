//! File-to-file stage implementations behind the subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use super::{create_file, open_file, read_to_string};
use crate::analytics::{day_of_week_histogram, heatmap_grid, tweets_per_user_distribution, HashtagCounts};
use crate::classify::{
    predict_batch, train_linear, train_random_forest, Classifier, FeatureKind, FeatureVector, Featurizer, Label,
    ModelKind, Prediction,
};
use crate::corpus::{read_records, CorpusFilter, CorpusStats, GeoBox, Tweet};
use crate::embed::{nearest_neighbors, train_embeddings, EmbedConfig, EmbeddingModel};
use crate::eval::{assemble_gold, check_disjoint, evaluate, read_annotations, EvalReport, TermQuery};
use crate::textprep::TokenizedDoc;
use crate::vocab::{build_vocabulary, Vocabulary};

use super::config::RunConfig;

/// Reads tweet records, skipping malformed lines with a warning.
pub fn read_tweets(path: &Path) -> Result<Vec<Tweet>> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for rec in read_records(open_file(path)?) {
        match rec.with_context(|| format!("reading {}", path.display()))? {
            Ok(r) => out.push(r.tweet),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} malformed records in {}", path.display());
    }
    Ok(out)
}

pub fn read_docs(path: &Path) -> Result<Vec<TokenizedDoc>> {
    let mut out = Vec::new();
    for (i, line) in open_file(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad token record", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

pub fn write_docs(path: &Path, docs: &[TokenizedDoc]) -> Result<()> {
    let mut w = create_file(path)?;
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::from_json(&read_to_string(path)?).with_context(|| format!("loading {}", path.display()))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingModel> {
    EmbeddingModel::read_from(open_file(path)?).with_context(|| format!("loading {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<Classifier> {
    Classifier::read_from(open_file(path)?).with_context(|| format!("loading {}", path.display()))
}

pub fn load_annotations(path: &Path) -> Result<BTreeMap<u64, Label>> {
    read_annotations(open_file(path)?).with_context(|| format!("loading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Streams `input`, copying retained records verbatim to `output`.
pub fn filter_file(input: &Path, output: Option<&Path>, city: GeoBox, language: &str) -> Result<CorpusStats> {
    let mut filter = CorpusFilter::new(city, language);
    let mut out = output.map(create_file).transpose()?;
    for rec in read_records(open_file(input)?) {
        match rec.with_context(|| format!("reading {}", input.display()))? {
            Ok(r) => {
                if filter.observe(&r.tweet) {
                    if let Some(w) = out.as_mut() {
                        w.write_all(r.raw.trim_end().as_bytes())?;
                        w.write_all(b"\n")?;
                    }
                }
            }
            Err(_) => filter.skip_malformed(),
        }
    }
    if let Some(mut w) = out {
        w.flush()?;
    }
    Ok(filter.stats())
}

pub fn write_stats(path: &Path, stats: &CorpusStats) -> Result<()> {
    write_json(path, stats)
}

pub fn preprocess_file(input: &Path, output: &Path) -> Result<usize> {
    let docs: Vec<TokenizedDoc> = read_tweets(input)?
        .iter()
        .map(|t| TokenizedDoc::from_text(t.id, &t.text))
        .collect();
    write_docs(output, &docs)?;
    Ok(docs.len())
}

/// Builds the vocabulary, optionally only from the documents annotated in
/// `restrict_to`.
pub fn vocab_file(
    tokens: &Path,
    output: &Path,
    max_terms: usize,
    max_df_ratio: f64,
    restrict_to: Option<&Path>,
) -> Result<Vocabulary> {
    let mut docs = read_docs(tokens)?;
    if let Some(ann) = restrict_to {
        let ids = load_annotations(ann)?;
        docs.retain(|d| ids.contains_key(&d.tweet_id));
    }
    let vocab = build_vocabulary(&docs, max_terms, max_df_ratio)?;
    let mut w = create_file(output)?;
    w.write_all(vocab.to_json().as_bytes())?;
    w.flush()?;
    Ok(vocab)
}

pub fn embed_train_file(tokens: &Path, output: &Path, config: &EmbedConfig) -> Result<EmbeddingModel> {
    let docs = read_docs(tokens)?;
    let model = train_embeddings(&docs, config)?;
    let mut w = create_file(output)?;
    model.write_to(&mut w)?;
    Ok(model)
}

pub fn neighbors(model: &Path, term: &str, k: usize) -> Result<Vec<(String, f64)>> {
    Ok(nearest_neighbors(term, k, &load_embeddings(model)?)?)
}

/// Loads the extractors a feature set needs.
pub fn featurizer(kind: FeatureKind, vocab: Option<&Path>, embeddings: Option<&Path>) -> Result<Featurizer> {
    let vocab = match (kind.uses_bow(), vocab) {
        (true, None) => bail!("{kind} features need --vocab"),
        (true, Some(p)) => Some(load_vocab(p)?),
        (false, _) => None,
    };
    let embeddings = match (kind.uses_boe(), embeddings) {
        (true, None) => bail!("{kind} features need --embeddings"),
        (true, Some(p)) => Some(load_embeddings(p)?),
        (false, _) => None,
    };
    Ok(Featurizer::for_kind(kind, vocab, embeddings)?)
}

/// Feature set implied by a trained model's schema.
pub fn featurizer_for(model: &Classifier, vocab: Option<&Path>, embeddings: Option<&Path>) -> Result<Featurizer> {
    let s = model.schema();
    let kind = match (s.vocab_dim > 0, s.embed_dim > 0) {
        (true, true) => FeatureKind::BowBoe,
        (true, false) => FeatureKind::Bow,
        (false, true) => FeatureKind::Boe,
        (false, false) => bail!("model has an empty feature schema"),
    };
    let f = featurizer(kind, vocab, embeddings)?;
    if f.schema() != s {
        bail!(
            "feature extractors give {:?} but the model expects {:?}",
            f.schema(),
            s
        );
    }
    Ok(f)
}

fn featurize_all(f: &Featurizer, docs: &[TokenizedDoc]) -> Vec<(u64, FeatureVector)> {
    docs.iter().map(|d| (d.tweet_id, f.featurize(d))).collect()
}

pub struct TrainInputs<'a> {
    pub tokens: &'a Path,
    pub annotations: &'a Path,
    pub vocab: Option<&'a Path>,
    pub embeddings: Option<&'a Path>,
    /// Held-out annotations that must not overlap the training ones.
    pub held_out: Option<&'a Path>,
}

pub fn train_file(inputs: &TrainInputs, cfg: &RunConfig, output: &Path) -> Result<Classifier> {
    let f = featurizer(cfg.classifier.features, inputs.vocab, inputs.embeddings)?;
    let annotations = load_annotations(inputs.annotations)?;
    if let Some(h) = inputs.held_out {
        check_disjoint(&annotations, &load_annotations(h)?)?;
    }
    let docs = read_docs(inputs.tokens)?;
    let candidates = featurize_all(&f, &docs);
    let gold = assemble_gold(f.schema(), &candidates, &annotations)?;
    let b = gold.balance;
    eprintln!(
        "training {} on {} examples ({} travel / {} non_travel)",
        cfg.classifier.model,
        gold.dataset.len(),
        b.positives,
        b.negatives
    );
    if b.imbalanced {
        eprintln!("warning: training set is imbalanced");
    }
    let model = match cfg.classifier.model {
        ModelKind::Svm | ModelKind::Logreg => Classifier::Linear(train_linear(&gold.dataset, &cfg.linear_config())?),
        ModelKind::Rf => Classifier::Forest(train_random_forest(&gold.dataset, &cfg.forest_config()?)?.model),
    };
    let mut w = create_file(output)?;
    model.write_to(&mut w)?;
    Ok(model)
}

#[derive(Serialize)]
struct PredictionRow {
    tweet_id: u64,
    score: f64,
    label: Label,
}

pub fn predict_docs(model: &Classifier, f: &Featurizer, docs: &[TokenizedDoc], workers: usize) -> Result<Vec<Prediction>> {
    let xs: Vec<FeatureVector> = docs.iter().map(|d| f.featurize(d)).collect();
    Ok(predict_batch(model, &xs, workers)?)
}

pub fn predict_file(
    model_path: &Path,
    tokens: &Path,
    vocab: Option<&Path>,
    embeddings: Option<&Path>,
    output: &Path,
    workers: usize,
) -> Result<usize> {
    let model = load_model(model_path)?;
    let f = featurizer_for(&model, vocab, embeddings)?;
    let docs = read_docs(tokens)?;
    let preds = predict_docs(&model, &f, &docs, workers)?;
    let mut w = csv::Writer::from_writer(create_file(output)?);
    for (d, p) in docs.iter().zip(&preds) {
        w.serialize(PredictionRow {
            tweet_id: d.tweet_id,
            score: p.score,
            label: p.label,
        })?;
    }
    w.flush()?;
    Ok(preds.iter().filter(|p| p.label.is_positive()).count())
}

pub struct EvalInputs<'a> {
    pub model: &'a Path,
    pub tokens: &'a Path,
    pub annotations: &'a Path,
    pub vocab: Option<&'a Path>,
    pub embeddings: Option<&'a Path>,
    pub train_annotations: Option<&'a Path>,
}

pub fn eval_file(inputs: &EvalInputs, report_path: Option<&Path>, roc_path: Option<&Path>, workers: usize) -> Result<EvalReport> {
    let model = load_model(inputs.model)?;
    let f = featurizer_for(&model, inputs.vocab, inputs.embeddings)?;
    let annotations = load_annotations(inputs.annotations)?;
    if let Some(t) = inputs.train_annotations {
        check_disjoint(&load_annotations(t)?, &annotations)?;
    }
    let docs = read_docs(inputs.tokens)?;
    let gold = assemble_gold(f.schema(), &featurize_all(&f, &docs), &annotations)?;
    if gold.balance.imbalanced {
        eprintln!(
            "warning: test set is imbalanced ({} travel / {} non_travel)",
            gold.balance.positives, gold.balance.negatives
        );
    }
    let xs: Vec<FeatureVector> = gold.dataset.examples.iter().map(|e| e.features.clone()).collect();
    let golds: Vec<Label> = gold.dataset.examples.iter().map(|e| e.label).collect();
    let scores: Vec<f64> = predict_batch(&model, &xs, workers)?.iter().map(|p| p.score).collect();
    let report = evaluate(&scores, &golds, model.threshold())?;
    if let Some(p) = report_path {
        let mut w = create_file(p)?;
        w.write_all(report.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    if let Some(p) = roc_path {
        report.write_roc_csv(create_file(p)?)?;
    }
    Ok(report)
}

pub fn bootstrap_file(input: &Path, query: &TermQuery, output: &Path) -> Result<usize> {
    let mut w = create_file(output)?;
    let mut n = 0;
    for rec in read_records(open_file(input)?) {
        if let Ok(r) = rec? {
            if query.matches(&r.tweet.text) {
                w.write_all(r.raw.trim_end().as_bytes())?;
                w.write_all(b"\n")?;
                n += 1;
            }
        }
    }
    w.flush()?;
    Ok(n)
}

pub fn read_terms(path: &Path) -> Result<TermQuery> {
    Ok(TermQuery::from_reader(open_file(path)?)?)
}

/// Restricts analytics to tweets a classifier labels travel.
pub struct PositiveFilter<'a> {
    pub model: &'a Path,
    pub vocab: Option<&'a Path>,
    pub embeddings: Option<&'a Path>,
    pub workers: usize,
}

pub fn analysis_input(input: &Path, positives: Option<&PositiveFilter>) -> Result<Vec<Tweet>> {
    let tweets = read_tweets(input)?;
    let Some(pf) = positives else {
        return Ok(tweets);
    };
    let model = load_model(pf.model)?;
    let f = featurizer_for(&model, pf.vocab, pf.embeddings)?;
    let docs: Vec<TokenizedDoc> = tweets.iter().map(|t| TokenizedDoc::from_text(t.id, &t.text)).collect();
    let preds = predict_docs(&model, &f, &docs, pf.workers)?;
    Ok(tweets
        .into_iter()
        .zip(preds)
        .filter(|(_, p)| p.label.is_positive())
        .map(|(t, _)| t)
        .collect())
}

pub fn analyze_dow(tweets: &[Tweet], utc_offset_minutes: i64, output: &Path) -> Result<[u64; 7]> {
    let h = day_of_week_histogram(tweets, utc_offset_minutes);
    if is_csv(output) {
        h.write_csv(create_file(output)?)?;
    } else {
        let mut w = create_file(output)?;
        w.write_all(h.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(h.counts)
}

pub fn analyze_users(tweets: &[Tweet], output: &Path) -> Result<()> {
    let s = tweets_per_user_distribution(tweets);
    if is_csv(output) {
        s.write_csv(create_file(output)?)?;
    } else {
        write_json(output, &s)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HashtagRow {
    hashtag: String,
    count: u64,
}

pub fn analyze_hashtags(tweets: &[Tweet], k: usize, output: &Path) -> Result<()> {
    let mut counts = HashtagCounts::default();
    for t in tweets {
        counts.add_text(&t.text);
    }
    let rows: Vec<HashtagRow> = counts
        .top(k)
        .into_iter()
        .map(|(hashtag, count)| HashtagRow { hashtag, count })
        .collect();
    if is_csv(output) {
        let mut w = csv::Writer::from_writer(create_file(output)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    } else {
        write_json(output, &rows)?;
    }
    Ok(())
}

pub fn analyze_heatmap(
    tweets: &[Tweet],
    bounds: GeoBox,
    rows: usize,
    cols: usize,
    csv_out: &Path,
    geojson_out: Option<&Path>,
) -> Result<()> {
    let grid = heatmap_grid(tweets, bounds, rows, cols)?;
    grid.write_csv(create_file(csv_out)?)?;
    if let Some(p) = geojson_out {
        write_json(p, &grid.to_geojson())?;
    }
    eprintln!("heatmap: {} placed, {} dropped", grid.total(), grid.dropped());
    Ok(())
}

/// Ids from an annotation file, for callers that only need membership.
pub fn annotated_ids(path: &Path) -> Result<BTreeSet<u64>> {
    Ok(load_annotations(path)?.into_keys().collect())
}
