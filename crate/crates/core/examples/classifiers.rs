//! Trains a linear SVM, logistic regression and random forest on BoW+BoE
//! features of a synthetic corpus and compares them on held-out tweets.

use travel_tweets::classify::{
    train_linear, train_random_forest, Classifier, Dataset, FeatureKind, Featurizer, ForestConfig, LabeledExample,
    LinearConfig,
};
use travel_tweets::embed::{train_embeddings, EmbedConfig};
use travel_tweets::eval::evaluate;
use travel_tweets::synth::{generate, SynthConfig};
use travel_tweets::textprep::TokenizedDoc;
use travel_tweets::vocab::build_vocabulary;

fn main() -> anyhow::Result<()> {
    let corpus = generate(&SynthConfig::clean(3000, 11));
    let docs: Vec<TokenizedDoc> = corpus.iter().map(|t| TokenizedDoc::from_text(t.tweet.id, &t.tweet.text)).collect();
    let (train, test) = docs.split_at(2000);

    let vocab = build_vocabulary(train, 3000, 0.6)?;
    let emb = train_embeddings(&docs, &EmbedConfig::default())?;
    let f = Featurizer::for_kind(FeatureKind::BowBoe, Some(vocab), Some(emb))?;

    let examples = train
        .iter()
        .zip(&corpus)
        .map(|(d, t)| LabeledExample {
            features: f.featurize(d),
            label: t.label,
            tweet_id: d.tweet_id,
        })
        .collect();
    let data = Dataset::new(f.schema(), examples)?;

    let models = [
        ("svm", Classifier::Linear(train_linear(&data, &LinearConfig::svm())?)),
        ("logreg", Classifier::Linear(train_linear(&data, &LinearConfig::logistic())?)),
        (
            "rf",
            Classifier::Forest(train_random_forest(&data, &ForestConfig { n_trees: 50, ..ForestConfig::default() })?.model),
        ),
    ];
    let golds: Vec<_> = corpus[2000..].iter().map(|t| t.label).collect();
    for (name, m) in &models {
        let scores = test.iter().map(|d| m.predict_score(&f.featurize(d))).collect::<Result<Vec<_>, _>>()?;
        let r = evaluate(&scores, &golds, m.threshold())?;
        println!("{name:<7} P {:.4} R {:.4} F1 {:.4} AUC {:.4}", r.precision, r.recall, r.f1, r.auc);
    }
    Ok(())
}
