//! Regenerates the bundled pipeline fixture.
//!
//! cargo run --example make_fixture [-- <dir>]

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use travel_tweets::classify::Label;
use travel_tweets::corpus::{filter_corpus, format_tweet_record, GeoBox};
use travel_tweets::eval::{balanced_sample, disjoint_sample, write_annotations, TermQuery};
use travel_tweets::synth::{generate, SynthConfig};

const SEED: u64 = 2017;
const PER_CLASS: usize = 250;
const TEST_SIZE: usize = 300;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&dir)?;

    let corpus = generate(&SynthConfig::realistic(2000, SEED));
    let mut w = BufWriter::new(File::create(dir.join("tweets.jsonl"))?);
    for t in &corpus {
        writeln!(w, "{}", format_tweet_record(&t.tweet))?;
    }
    w.flush()?;

    // Annotations may only reference tweets that survive the filter.
    let (kept, stats) = filter_corpus(corpus.iter().map(|t| t.tweet.clone()), GeoBox::rio_de_janeiro(), "pt");
    let kept_ids: BTreeSet<u64> = kept.iter().map(|t| t.id).collect();
    let truth: BTreeMap<u64, Label> = corpus
        .iter()
        .filter(|t| kept_ids.contains(&t.tweet.id))
        .map(|t| (t.tweet.id, t.label))
        .collect();

    // Positives come from the term bootstrap, negatives from everything else.
    let query = TermQuery::default();
    let pool: BTreeMap<u64, Label> = kept
        .iter()
        .filter(|t| truth[&t.id] == Label::NonTravel || query.matches(&t.text))
        .map(|t| (t.id, truth[&t.id]))
        .collect();
    let train = balanced_sample(&pool, PER_CLASS, SEED)?;
    let ids: Vec<u64> = truth.keys().copied().collect();
    let exclude: BTreeSet<u64> = train.keys().copied().collect();
    let test: BTreeMap<u64, Label> = disjoint_sample(&ids, &exclude, TEST_SIZE, SEED + 1)?
        .into_iter()
        .map(|id| (id, truth[&id]))
        .collect();

    write_annotations(File::create(dir.join("train.csv"))?, &train)?;
    write_annotations(File::create(dir.join("test.csv"))?, &test)?;
    fs::write(
        dir.join("run.toml"),
        format!(
            r#"seed = {SEED}
workers = 1

[corpus]
city = "rio"
language = "pt"

[classifier]
model = "svm"
features = "bow+boe"

[analytics]
grid_rows = 50
grid_cols = 50

[paths]
input = "tweets.jsonl"
train_annotations = "train.csv"
test_annotations = "test.csv"
output_dir = "out"
"#
        ),
    )?;
    println!(
        "{} tweets, {} kept, {} train, {} test in {}",
        stats.total,
        kept.len(),
        train.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}
