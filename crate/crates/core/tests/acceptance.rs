//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints a PASS/FAIL line; the process fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use travel_tweets::analytics::{day_of_week_histogram, heatmap_grid, tweets_per_user_distribution};
use travel_tweets::classify::{
    objective_and_grad, train_linear, train_random_forest, Classifier, Dataset, FeatureKind, FeatureVector,
    Featurizer, ForestConfig, Label, LabeledExample, LinearConfig, LossKind,
};
use travel_tweets::cli::pipeline::{sha256_file, Manifest, MANIFEST_FILE};
use travel_tweets::corpus::{resolve_location, GeoBox, GeoPoint, ResolutionKind, Tweet};
use travel_tweets::embed::{cosine, sgns_loss_and_grad, train_embeddings, EmbedConfig, EmbeddingModel};
use travel_tweets::eval::{auc, balanced_sample, disjoint_sample, evaluate, f1_score, TermQuery};
use travel_tweets::synth::{generate, planted_synonym_corpus, power_law_user_corpus, SynthConfig};
use travel_tweets::textprep::{normalize, TokenizedDoc};
use travel_tweets::vocab::{build_vocabulary, Vocabulary};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

/// (precision, recall, published F1) for every row of the results table.
const TABLE: [(&str, f64, f64, f64); 9] = [
    ("svm bow", 1.0, 0.6761, 0.8067),
    ("svm boe", 0.4338, 0.8309, 0.5700),
    ("svm bow+boe", 1.0, 0.7465, 0.8548),
    ("logreg bow", 1.0, 0.6338, 0.7759),
    ("logreg boe", 0.4444, 0.8451, 0.5825),
    ("logreg bow+boe", 1.0, 0.6761, 0.8067),
    ("rf bow", 1.0, 0.6338, 0.7759),
    ("rf boe", 0.2298, 0.8028, 0.3574),
    ("rf bow+boe", 1.0, 0.6338, 0.7759),
];

fn metric_arithmetic() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (name, p, r, published) in TABLE {
        let err = (f1_score(p, r) - published).abs();
        worst = worst.max(err);
        if err > 1e-4 {
            bad.push(format!("{name}: {:.6} vs {published}", f1_score(p, r)));
        }
    }
    check(bad.is_empty(), format!("9 rows, max |err| {worst:.2e} {}", bad.join("; ")))
}

// ---------------------------------------------------------------- 2

const TICK: f64 = 100.0;
const LAT0: i64 = -2350;
const LON0: i64 = -4360;

#[derive(Clone, Copy, Debug)]
struct TickBox {
    sw: (i64, i64),
    ne: (i64, i64),
}

fn tick_lat(i: i64) -> f64 {
    (LAT0 + i) as f64 / TICK
}

fn tick_lon(j: i64) -> f64 {
    (LON0 + j) as f64 / TICK
}

fn to_box(b: TickBox) -> GeoBox {
    GeoBox::from_corners(tick_lat(b.sw.0), tick_lon(b.sw.1), tick_lat(b.ne.0), tick_lon(b.ne.1)).unwrap()
}

fn raster(b: TickBox) -> HashSet<(i64, i64)> {
    (b.sw.0..=b.ne.0).flat_map(|i| (b.sw.1..=b.ne.1).map(move |j| (i, j))).collect()
}

/// Decision table evaluated on lattice rasters of the boxes.
fn oracle(point: Option<(i64, i64)>, place: Option<TickBox>, city: TickBox) -> (ResolutionKind, Option<(f64, f64)>) {
    let cells = raster(city);
    if let Some((i, j)) = point {
        return if cells.contains(&(i, j)) {
            (ResolutionKind::InsideByCoordinates, Some((tick_lat(i), tick_lon(j))))
        } else {
            (ResolutionKind::Outside, None)
        };
    }
    match place {
        Some(b) if !raster(b).is_disjoint(&cells) => {
            let c = (
                (tick_lat(b.sw.0) + tick_lat(b.ne.0)) / 2.0,
                (tick_lon(b.sw.1) + tick_lon(b.ne.1)) / 2.0,
            );
            (ResolutionKind::InsideByPlaceOverlap, Some(c))
        }
        Some(_) => (ResolutionKind::Outside, None),
        None => (ResolutionKind::Unresolvable, None),
    }
}

fn geo_tweet(point: Option<(i64, i64)>, place: Option<TickBox>) -> Tweet {
    Tweet {
        id: 1,
        text: String::new(),
        lang: "pt".into(),
        created_at: Utc.with_ymd_and_hms(2017, 3, 1, 0, 0, 0).unwrap(),
        coordinates: point.map(|(i, j)| GeoPoint::new(tick_lat(i), tick_lon(j)).unwrap()),
        place_box: place.map(to_box),
        place_name: None,
        user_id: None,
    }
}

fn geo_agrees(point: Option<(i64, i64)>, place: Option<TickBox>, city: TickBox) -> bool {
    let got = resolve_location(&geo_tweet(point, place), to_box(city));
    let (kind, p) = oracle(point, place, city);
    got.kind == kind && got.effective_point.map(|g| (g.lat(), g.lon())) == p
}

fn random_box(rng: &mut ChaCha8Rng) -> TickBox {
    let (i, j) = (rng.gen_range(0..50), rng.gen_range(0..50));
    TickBox {
        sw: (i, j),
        ne: (i + rng.gen_range(0..=20), j + rng.gen_range(0..=20)),
    }
}

fn geo_resolution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    for _ in 0..10_000 {
        let city = random_box(&mut rng);
        let point = rng.gen_bool(0.5).then(|| (rng.gen_range(-5..75), rng.gen_range(-5..75)));
        let place = rng.gen_bool(0.7).then(|| random_box(&mut rng));
        if !geo_agrees(point, place, city) {
            disagreements += 1;
        }
    }
    let city = TickBox { sw: (10, 10), ne: (20, 30) };
    let b = |sw: (i64, i64), ne: (i64, i64)| TickBox { sw, ne };
    let boundary: Vec<(&str, Option<(i64, i64)>, Option<TickBox>, ResolutionKind)> = vec![
        ("point on sw corner", Some((10, 10)), None, ResolutionKind::InsideByCoordinates),
        ("point on ne corner", Some((20, 30)), None, ResolutionKind::InsideByCoordinates),
        ("point on north edge", Some((20, 15)), None, ResolutionKind::InsideByCoordinates),
        ("point just past east edge", Some((15, 31)), None, ResolutionKind::Outside),
        ("place touching ne corner", None, Some(b((20, 30), (25, 35))), ResolutionKind::InsideByPlaceOverlap),
        ("place touching sw corner", None, Some(b((5, 5), (10, 10))), ResolutionKind::InsideByPlaceOverlap),
        ("place sharing west edge", None, Some(b((12, 2), (18, 10))), ResolutionKind::InsideByPlaceOverlap),
        ("place one tick away", None, Some(b((12, 2), (18, 9))), ResolutionKind::Outside),
        ("centroid on south edge", None, Some(b((6, 12), (14, 16))), ResolutionKind::InsideByPlaceOverlap),
        ("centroid on east edge", None, Some(b((12, 26), (14, 34))), ResolutionKind::InsideByPlaceOverlap),
        ("place containing city", None, Some(b((0, 0), (40, 40))), ResolutionKind::InsideByPlaceOverlap),
        ("outside point beats overlapping place", Some((0, 0)), Some(b((12, 12), (14, 14))), ResolutionKind::Outside),
        ("no location", None, None, ResolutionKind::Unresolvable),
    ];
    let mut failed = Vec::new();
    for (name, point, place, expected) in &boundary {
        let got = resolve_location(&geo_tweet(*point, *place), to_box(city)).kind;
        if got != *expected || !geo_agrees(*point, *place, city) {
            failed.push(*name);
        }
    }
    check(
        disagreements == 0 && failed.is_empty(),
        format!(
            "10000 random cases, {disagreements} disagreements; {} boundary cases, failed {failed:?}",
            boundary.len()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn mann_whitney(scores: &[f64], golds: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (sp, _) in scores.iter().zip(golds).filter(|(_, g)| g.is_positive()) {
        for (sn, _) in scores.iter().zip(golds).filter(|(_, g)| !g.is_positive()) {
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=1000);
        let levels = rng.gen_range(2..=50);
        let mut golds: Vec<Label> = (0..n).map(|_| Label::from_positive(rng.gen_bool(0.4))).collect();
        golds[0] = Label::Travel;
        golds[1] = Label::NonTravel;
        // Quantized scores make ties common.
        let scores: Vec<f64> = golds
            .iter()
            .map(|g| {
                let shift = if g.is_positive() { 0.3 } else { 0.0 };
                ((rng.gen::<f64>() + shift) * levels as f64).floor() / levels as f64
            })
            .collect();
        let a = auc(&scores, &golds).map_err(|e| e.to_string())?;
        worst = worst.max((a - mann_whitney(&scores, &golds)).abs());
    }
    check(worst <= 1e-12, format!("100 instances, max |auc - pairwise| {worst:.2e}"))
}

// ---------------------------------------------------------------- 4

fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = norm(analytic) + norm(numeric);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn numeric_grad<F: Fn(&[f64]) -> f64>(f: F, at: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..at.len())
        .map(|i| {
            let mut up = at.to_vec();
            let mut down = at.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn linear_grad_error(kind: LossKind, rng: &mut ChaCha8Rng) -> f64 {
    let d = rng.gen_range(1..=10);
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let l2 = rng.gen_range(0.0..0.1);
    let params = loop {
        let p: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let z: f64 = p[..d].iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + p[d];
        if kind == LossKind::Logistic || (1.0 - y * z).abs() > 1e-3 {
            break p;
        }
    };
    let f = |p: &[f64]| objective_and_grad(kind, &p[..d], p[d], &x, y, l2).0;
    let (_, gw, gb) = objective_and_grad(kind, &params[..d], params[d], &x, y, l2);
    let mut analytic = gw;
    analytic.push(gb);
    rel_error(&analytic, &numeric_grad(f, &params))
}

fn sgns_grad_error(rng: &mut ChaCha8Rng) -> f64 {
    let dims = rng.gen_range(2..=20);
    let k = rng.gen_range(1..=5);
    let n_vec = 2 + k;
    let flat: Vec<f64> = (0..n_vec * dims).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let split = |p: &[f64]| -> Vec<Vec<f64>> { p.chunks(dims).map(|c| c.to_vec()).collect() };
    let loss = |p: &[f64]| {
        let v = split(p);
        let negs: Vec<&[f64]> = v[2..].iter().map(|n| n.as_slice()).collect();
        sgns_loss_and_grad(&v[0], &v[1], &negs).loss
    };
    let v = split(&flat);
    let negs: Vec<&[f64]> = v[2..].iter().map(|n| n.as_slice()).collect();
    let g = sgns_loss_and_grad(&v[0], &v[1], &negs);
    let mut analytic = g.center.clone();
    analytic.extend(&g.positive);
    for n in &g.negatives {
        analytic.extend(n);
    }
    rel_error(&analytic, &numeric_grad(loss, &flat))
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let worst = |errs: Vec<f64>| errs.into_iter().fold(0.0, f64::max);
    let logistic = worst((0..100).map(|_| linear_grad_error(LossKind::Logistic, &mut rng)).collect());
    let hinge = worst((0..100).map(|_| linear_grad_error(LossKind::Hinge, &mut rng)).collect());
    let sgns = worst((0..100).map(|_| sgns_grad_error(&mut rng)).collect());
    check(
        logistic < 1e-4 && hinge < 1e-4 && sgns < 1e-4,
        format!("max relative error: logistic {logistic:.2e}, hinge {hinge:.2e}, sgns {sgns:.2e}"),
    )
}

// ---------------------------------------------------------------- 5

struct ReplicationRun {
    f1_bow_boe: f64,
    recall_bow: f64,
    recall_bow_boe: f64,
    slang_in_vocab: usize,
}

fn docs_of(tweets: &[travel_tweets::synth::SynthTweet]) -> Vec<TokenizedDoc> {
    tweets.iter().map(|t| TokenizedDoc::from_text(t.tweet.id, &t.tweet.text)).collect()
}

fn replication(seed: u64) -> Result<ReplicationRun, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let corpus = generate(&SynthConfig::clean(8000, seed));
    let shifted = generate(&SynthConfig {
        slang_fraction: 1.0,
        travel_fraction: 1.0,
        first_id: 100_000,
        ..SynthConfig::clean(500, seed + 100)
    });
    let docs = docs_of(&corpus);
    let truth: BTreeMap<u64, Label> = corpus.iter().map(|t| (t.tweet.id, t.label)).collect();

    // Positives from the term bootstrap; negatives from the rest.
    let query = TermQuery::default();
    let pool: BTreeMap<u64, Label> = corpus
        .iter()
        .filter(|t| t.label == Label::NonTravel || query.matches(&t.tweet.text))
        .map(|t| (t.tweet.id, t.label))
        .collect();
    let train = balanced_sample(&pool, 2000, seed).map_err(|e| err(&e))?;
    let ids: Vec<u64> = truth.keys().copied().collect();
    let exclude: BTreeSet<u64> = train.keys().copied().collect();
    let test_ids: BTreeSet<u64> = disjoint_sample(&ids, &exclude, 1000, seed + 1)
        .map_err(|e| err(&e))?
        .into_iter()
        .collect();
    assert!(test_ids.is_disjoint(&exclude));

    let train_docs: Vec<TokenizedDoc> = docs.iter().filter(|d| train.contains_key(&d.tweet_id)).cloned().collect();
    let test_docs: Vec<&TokenizedDoc> = docs.iter().filter(|d| test_ids.contains(&d.tweet_id)).collect();
    let shifted_docs = docs_of(&shifted);
    let vocab = build_vocabulary(&train_docs, 3000, 0.6).map_err(|e| err(&e))?;
    let mut all_docs = docs.clone();
    all_docs.extend(shifted_docs.iter().cloned());
    let emb = train_embeddings(&all_docs, &EmbedConfig { seed, ..EmbedConfig::default() }).map_err(|e| err(&e))?;

    let slang: BTreeSet<&str> = travel_tweets::synth::TRANSPORT_MODES.iter().map(|m| m.2).collect();
    let slang_in_vocab = slang.iter().filter(|s| vocab.index_of(s).is_some()).count();

    let outcome = |kind: FeatureKind| -> Result<(f64, f64), String> {
        let f = Featurizer::for_kind(kind, Some(vocab.clone()), Some(emb.clone())).map_err(|e| err(&e))?;
        let examples = train_docs
            .iter()
            .map(|d| LabeledExample {
                features: f.featurize(d),
                label: train[&d.tweet_id],
                tweet_id: d.tweet_id,
            })
            .collect();
        let data = Dataset::new(f.schema(), examples).map_err(|e| err(&e))?;
        let model = train_linear(&data, &LinearConfig::svm()).map_err(|e| err(&e))?;
        let score = |d: &TokenizedDoc| model.predict_score(&f.featurize(d)).unwrap();
        let scores: Vec<f64> = test_docs.iter().map(|d| score(d)).collect();
        let golds: Vec<Label> = test_docs.iter().map(|d| truth[&d.tweet_id]).collect();
        let report = evaluate(&scores, &golds, model.threshold()).map_err(|e| err(&e))?;
        let hits = shifted_docs.iter().filter(|d| score(d) > model.threshold()).count();
        Ok((report.f1, hits as f64 / shifted_docs.len() as f64))
    };
    let (_, recall_bow) = outcome(FeatureKind::Bow)?;
    let (f1_bow_boe, recall_bow_boe) = outcome(FeatureKind::BowBoe)?;
    Ok(ReplicationRun {
        f1_bow_boe,
        recall_bow,
        recall_bow_boe,
        slang_in_vocab,
    })
}

fn end_to_end_replication() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in [1, 2, 3] {
        let r = replication(seed)?;
        let gap = r.recall_bow_boe - r.recall_bow;
        ok &= r.f1_bow_boe >= 0.95 && gap >= 0.05 && r.slang_in_vocab == 0;
        lines.push(format!(
            "seed {seed}: F1 {:.4}, shifted recall bow {:.4} bow+boe {:.4} (gap {gap:.4}), slang terms in vocab {}",
            r.f1_bow_boe, r.recall_bow, r.recall_bow_boe, r.slang_in_vocab
        ));
    }
    check(ok, lines.join(" | "))
}

// ---------------------------------------------------------------- 6

fn embedding_neighbourhoods() -> Outcome {
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 1..=10u64 {
        let corpus = planted_synonym_corpus(8, 200, seed);
        let cfg = EmbedConfig {
            dims: 100,
            window: 2,
            epochs: 10,
            seed,
            ..EmbedConfig::default()
        };
        let model = train_embeddings(&corpus.docs, &cfg).map_err(|e| e.to_string())?;
        let cos = |a: &str, b: &str| match (model.input_vector(a), model.input_vector(b)) {
            (Some(x), Some(y)) => Some(cosine(x, y)),
            _ => None,
        };
        let planted: Vec<f64> = corpus.pairs.iter().filter_map(|(a, b)| cos(a, b)).collect();
        let pair_set: HashSet<(&str, &str)> = corpus.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let mut random = Vec::new();
        while random.len() < 200 {
            let a = corpus.words.choose(&mut rng).unwrap().as_str();
            let b = corpus.words.choose(&mut rng).unwrap().as_str();
            if a != b && !pair_set.contains(&(a, b)) && !pair_set.contains(&(b, a)) {
                random.extend(cos(a, b));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mp, mr) = (mean(&planted), mean(&random));
        if planted.len() == corpus.pairs.len() && mp > mr {
            wins += 1;
        }
        lines.push(format!("{mp:.3}/{mr:.3}"));
    }
    check(wins >= 9, format!("{wins}/10 seeds planted > random (means {})", lines.join(" ")))
}

// ---------------------------------------------------------------- 7

const GOLDEN: [(&str, &str); 50] = [
    ("loooool", "loool"),
    ("LOOOOOL", "loool"),
    ("kkkkkkkk", "kkk"),
    ("aaa", "aaa"),
    ("aaaa", "aaa"),
    ("aaaa aaaa", "aaa aaa"),
    ("Ônibus LOTADO", "ônibus lotado"),
    ("METRÔ", "metrô"),
    ("SÃO PAULO", "são paulo"),
    ("ÇÇÇÇ", "ççç"),
    ("ééééé", "ééé"),
    ("vejam https://t.co/x9 @joao agora", "vejam agora"),
    ("HTTP://T.CO/ABC fim", "fim"),
    ("@maria", ""),
    ("", ""),
    ("   ", ""),
    ("a  b\tc\nd", "a b c d"),
    ("http://a.com", ""),
    ("https://a.com/x?y=1 ok", "ok"),
    ("veja:https://x.co/a", "veja:"),
    ("oi @joao_silva tudo", "oi tudo"),
    ("email a@b.com", "email a .com"),
    ("@a@b", ""),
    ("!!!!!", "!!!"),
    ("?????", "???"),
    ("hahahaha", "hahahaha"),
    ("#Rio", "#rio"),
    ("#RioDeJaneiro  lindo", "#riodejaneiro lindo"),
    ("peguei o busão", "peguei o busão"),
    ("bom diaaaaa @ana https://t.co/1", "bom diaaa"),
    ("mmmmm http://x.y", "mmm"),
    ("a....", "a..."),
    ("......", "..."),
    ("      a", "a"),
    ("a      ", "a"),
    ("Rio de Janeiro", "rio de janeiro"),
    ("http", "http"),
    ("http:/x", "http:/x"),
    ("ftp://x.com", "ftp://x.com"),
    ("@", "@"),
    ("@ joao", "@ joao"),
    ("oi\u{a0}tudo", "oi tudo"),
    ("x https://a https://b y", "x y"),
    ("a@@@@b", "a@@"),
    ("loooool http://t.co/x", "loool"),
    ("BOM DIA!!!!!!", "bom dia!!!"),
    ("1111111", "111"),
    ("😀😀😀😀", "😀😀😀"),
    ("tchau @joão", "tchau"),
    ("ok https://t.co/abc...fim", "ok"),
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "a", "o", "k", "l", "ô", "Ã", "É", "ç", "İ", "ß", " ", "  ", "\t", "\n", "\u{a0}", "!", "?", ".", "#", "@",
        "@joao", "http://", "https://t.co/", "x", "_", "😀", "ﬁ", "ΣΑΣ",
    ];
    let n = rng.gen_range(0..40);
    let mut s = String::new();
    for _ in 0..n {
        let piece = PIECES.choose(rng).unwrap();
        for _ in 0..rng.gen_range(1..=6) {
            s.push_str(piece);
        }
    }
    s
}

fn preprocessing_golden() -> Outcome {
    let failed: Vec<String> = GOLDEN
        .iter()
        .filter(|(input, want)| normalize(input) != *want)
        .map(|(input, want)| format!("{input:?} -> {:?}, want {want:?}", normalize(input)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut not_idempotent = 0;
    for _ in 0..10_000 {
        let once = normalize(&random_text(&mut rng));
        if normalize(&once) != once {
            not_idempotent += 1;
        }
    }
    check(
        failed.is_empty() && not_idempotent == 0,
        format!(
            "{}/50 golden cases, {not_idempotent}/10000 not idempotent {}",
            50 - failed.len(),
            failed.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 8

fn random_corpus(rng: &mut ChaCha8Rng, city: GeoBox) -> Vec<Tweet> {
    let n = rng.gen_range(0..300);
    let users = rng.gen_range(1..40);
    let sw = city.south_west();
    (0..n)
        .map(|i| {
            // Spread points over twice the city so some fall outside.
            let point = |rng: &mut ChaCha8Rng| {
                GeoPoint::new(
                    sw.lat() + rng.gen_range(-0.5..1.5) * city.lat_span(),
                    sw.lon() + rng.gen_range(-0.5..1.5) * city.lon_span(),
                )
                .unwrap()
            };
            let coordinates = rng.gen_bool(0.7).then(|| point(rng));
            let place_box = if rng.gen_bool(0.5) {
                let (a, b) = (point(rng), point(rng));
                Some(
                    GeoBox::from_corners(
                        a.lat().min(b.lat()),
                        a.lon().min(b.lon()),
                        a.lat().max(b.lat()),
                        a.lon().max(b.lon()),
                    )
                    .unwrap(),
                )
            } else {
                None
            };
            Tweet {
                id: i,
                text: String::new(),
                lang: "pt".into(),
                created_at: Utc.timestamp_opt(rng.gen_range(1_400_000_000..1_600_000_000), 0).unwrap(),
                coordinates,
                place_box,
                place_name: None,
                user_id: rng.gen_bool(0.9).then(|| rng.gen_range(0..users)),
            }
        })
        .collect()
}

fn analytics_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let city = GeoBox::rio_de_janeiro();
    let mut violations = Vec::new();
    for c in 0..1000 {
        let tweets = random_corpus(&mut rng, city);
        let n = tweets.len() as u64;
        let rows = rng.gen_range(1..=30);
        let cols = rng.gen_range(1..=30);
        let grid = heatmap_grid(&tweets, city, rows, cols).map_err(|e| e.to_string())?;
        let placeable = tweets
            .iter()
            .filter(|t| {
                let p = t.coordinates.or_else(|| t.place_box.map(|b| b.centroid()));
                p.is_some_and(|p| city.contains(p))
            })
            .count() as u64;
        if grid.total() + grid.dropped() != n || grid.total() != placeable {
            violations.push(format!("heatmap corpus {c}"));
        }
        if day_of_week_histogram(&tweets, rng.gen_range(-720..=840)).total() != n {
            violations.push(format!("dow corpus {c}"));
        }
        let s = tweets_per_user_distribution(&tweets);
        let weighted: u64 = s.histogram.iter().map(|(t, u)| t * u).sum();
        let users: u64 = s.histogram.values().sum();
        let distinct = tweets.iter().filter_map(|t| t.user_id).collect::<BTreeSet<_>>().len() as u64;
        if s.band_lt10 + s.band_10_100 + s.band_gt100 != s.distinct_users
            || users != distinct
            || s.distinct_users != distinct
            || weighted != s.attributed_tweets
            || s.attributed_tweets + s.unattributed != n
        {
            violations.push(format!("users corpus {c}"));
        }
    }
    let fractions: Vec<f64> = (1..=5)
        .map(|seed| tweets_per_user_distribution(&power_law_user_corpus(2000, 0.5, seed)).band_lt10_fraction())
        .collect();
    let lowest = fractions.iter().copied().fold(1.0, f64::min);
    check(
        violations.is_empty() && lowest > 0.6,
        format!(
            "1000 corpora, {} violations {:?}; band_lt10 fraction over 5 seeds min {lowest:.3}",
            violations.len(),
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn bits(scores: &[f64]) -> Vec<u64> {
    scores.iter().map(|s| s.to_bits()).collect()
}

fn model_roundtrips() -> Result<Vec<String>, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let corpus = generate(&SynthConfig::clean(1500, 9));
    let docs = docs_of(&corpus);
    let (train, probe) = docs.split_at(1000);

    let vocab = build_vocabulary(train, 3000, 0.6).map_err(|e| err(&e))?;
    let vocab2 = Vocabulary::from_json(&vocab.to_json()).map_err(|e| err(&e))?;
    let emb = train_embeddings(&docs, &EmbedConfig { epochs: 3, ..EmbedConfig::default() }).map_err(|e| err(&e))?;
    let emb_bytes = emb.to_bytes();
    let emb2 = EmbeddingModel::read_from(emb_bytes.as_slice()).map_err(|e| err(&e))?;

    let f = Featurizer::for_kind(FeatureKind::BowBoe, Some(vocab), Some(emb)).map_err(|e| err(&e))?;
    let f2 = Featurizer::for_kind(FeatureKind::BowBoe, Some(vocab2), Some(emb2.clone())).map_err(|e| err(&e))?;
    let xs: Vec<FeatureVector> = probe.iter().map(|d| f.featurize(d)).collect();
    let xs2: Vec<FeatureVector> = probe.iter().map(|d| f2.featurize(d)).collect();

    let mut notes = Vec::new();
    if xs != xs2 {
        return Err("features differ after reloading vocabulary and embeddings".into());
    }
    if emb2.to_bytes() != emb_bytes {
        return Err("embedding model bytes differ after reload".into());
    }
    notes.push("vocab+embeddings: identical features".to_string());

    let examples = train
        .iter()
        .zip(&corpus)
        .map(|(d, t)| LabeledExample {
            features: f.featurize(d),
            label: t.label,
            tweet_id: d.tweet_id,
        })
        .collect();
    let data = Dataset::new(f.schema(), examples).map_err(|e| err(&e))?;
    let models = [
        ("svm", Classifier::Linear(train_linear(&data, &LinearConfig::svm()).map_err(|e| err(&e))?)),
        ("logreg", Classifier::Linear(train_linear(&data, &LinearConfig::logistic()).map_err(|e| err(&e))?)),
        (
            "rf",
            Classifier::Forest(
                train_random_forest(&data, &ForestConfig { n_trees: 30, ..ForestConfig::default() })
                    .map_err(|e| err(&e))?
                    .model,
            ),
        ),
    ];
    for (name, m) in &models {
        let bytes = m.to_bytes();
        let back = Classifier::read_from(bytes.as_slice()).map_err(|e| err(&e))?;
        let before: Vec<f64> = xs.iter().map(|x| m.predict_score(x).unwrap()).collect();
        let after: Vec<f64> = xs2.iter().map(|x| back.predict_score(x).unwrap()).collect();
        if bits(&before) != bits(&after) || back.to_bytes() != bytes {
            return Err(format!("{name} predictions differ after reload"));
        }
        notes.push(format!("{name}: {} identical scores", before.len()));
    }
    Ok(notes)
}

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/run.toml")
}

fn run_cli_pipeline(out: &Path) -> Result<Manifest, String> {
    let args = [
        "travel-tweets".into(),
        "--config".into(),
        fixture_config().into_os_string(),
        "pipeline".into(),
        "--output-dir".into(),
        out.as_os_str().to_owned(),
    ];
    let code = travel_tweets::cli::run(args);
    if code != 0 {
        return Err(format!("pipeline exited with {code}"));
    }
    Manifest::load(&out.join(MANIFEST_FILE)).map_err(|e| e.to_string())
}

fn output_digests(m: &Manifest) -> Vec<(String, String)> {
    m.stages
        .iter()
        .flat_map(|s| s.outputs.iter().map(|f| (f.path.clone(), f.sha256.clone())))
        .collect()
}

fn pipeline_reruns() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ma = run_cli_pipeline(&a)?;
    let mb = run_cli_pipeline(&b)?;
    let (da, db) = (output_digests(&ma), output_digests(&mb));
    if da != db {
        return Err("output digests differ between reruns".into());
    }
    for (path, digest) in &da {
        let actual = sha256_file(&a.join(path)).map_err(|e| e.to_string())?;
        if &actual != digest {
            return Err(format!("manifest digest for {path} is stale"));
        }
    }
    let listed: BTreeSet<&str> = da.iter().map(|(p, _)| p.as_str()).collect();
    for entry in std::fs::read_dir(&a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_FILE && !listed.contains(name.as_str()) {
            return Err(format!("{name} missing from the manifest"));
        }
    }
    for needed in ["model.trvl", "eval_report.json", "heatmap.csv"] {
        if !listed.contains(needed) {
            return Err(format!("pipeline did not produce {needed}"));
        }
    }
    Ok(format!("{} artifacts identical across reruns", da.len()))
}

fn serialization() -> Outcome {
    let mut notes = model_roundtrips()?;
    notes.push(pipeline_reruns()?);
    Ok(notes.join("; "))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 metric arithmetic vs published table", metric_arithmetic),
        ("2 geo-resolution oracle", geo_resolution),
        ("3 AUC equals pairwise statistic", auc_equivalence),
        ("4 gradient checks", gradient_checks),
        ("5 synthetic end-to-end replication", end_to_end_replication),
        ("6 embedding planted synonyms", embedding_neighbourhoods),
        ("7 preprocessing golden table", preprocessing_golden),
        ("8 analytics conservation", analytics_conservation),
        ("9 serialization round-trips", serialization),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
