use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbedConfig, EmbedError, EmbeddingModel};
use crate::textprep::TokenizedDoc;

/// Final learning rate as a fraction of the initial one.
const MIN_LR_FRACTION: f32 = 1e-4;
const UNIGRAM_POWER: f64 = 0.75;

/// Parameter table shared between workers. Components are read and written
/// with relaxed atomics and no further synchronization, so concurrent
/// workers may overwrite each other's updates; a single worker sees
/// ordinary sequential semantics.
struct SharedTable(Vec<AtomicU32>);

impl SharedTable {
    fn new(values: Vec<f32>) -> Self {
        SharedTable(values.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, i: usize, delta: f32) {
        let v = self.get(i) + delta;
        self.0[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f32> {
        self.0.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

/// Samples word indices proportionally to count^0.75.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(UNIGRAM_POWER);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Trainer<'a> {
    config: &'a EmbedConfig,
    input: SharedTable,
    output: SharedTable,
    sampler: NegativeSampler,
    keep_prob: Option<Vec<f64>>,
    processed: AtomicU64,
    scheduled: u64,
}

impl Trainer<'_> {
    fn learning_rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f64 / self.scheduled as f64;
        let frac = 1.0 - (1.0 - MIN_LR_FRACTION as f64) * done.min(1.0);
        self.config.learning_rate * frac as f32
    }

    /// One positive pair plus sampled negatives, a single SGD step on the
    /// loss in [`sgns_loss_and_grad`].
    fn pair_update(&self, center: usize, context: usize, lr: f32, rng: &mut ChaCha8Rng, grad: &mut [f32]) {
        let dims = self.config.dims;
        let c0 = center * dims;
        grad.fill(0.0);
        for k in 0..=self.config.negatives {
            let (target, label) = if k == 0 {
                (context, 1.0)
            } else {
                let t = self.sampler.sample(rng);
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            let t0 = target * dims;
            let mut dot = 0.0f32;
            for d in 0..dims {
                dot += self.input.get(c0 + d) * self.output.get(t0 + d);
            }
            let g = (label - sigmoid(dot)) * lr;
            for (d, acc) in grad.iter_mut().enumerate() {
                *acc += g * self.output.get(t0 + d);
                self.output.add(t0 + d, g * self.input.get(c0 + d));
            }
        }
        for (d, &acc) in grad.iter().enumerate() {
            self.input.add(c0 + d, acc);
        }
    }

    fn run_worker(&self, sentences: &[Vec<u32>], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grad = vec![0.0f32; self.config.dims];
        let mut kept: Vec<usize> = Vec::new();
        let window = self.config.window;
        for _ in 0..self.config.epochs {
            for sentence in sentences {
                kept.clear();
                for &w in sentence {
                    let keep = match &self.keep_prob {
                        Some(p) => rng.gen::<f64>() < p[w as usize],
                        None => true,
                    };
                    if keep {
                        kept.push(w as usize);
                    }
                }
                for pos in 0..kept.len() {
                    let lr = self.learning_rate();
                    let lo = pos.saturating_sub(window);
                    let hi = (pos + window).min(kept.len() - 1);
                    for ctx in lo..=hi {
                        if ctx != pos {
                            self.pair_update(kept[pos], kept[ctx], lr, &mut rng, &mut grad);
                        }
                    }
                }
                self.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            }
        }
    }
}

fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed ^ (worker as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains skip-gram embeddings. One tweet is one sentence; windows never
/// cross tweets. With `workers == 1` the result is a pure function of the
/// inputs.
pub fn train_embeddings(docs: &[TokenizedDoc], config: &EmbedConfig) -> Result<EmbeddingModel, EmbedError> {
    config.validate()?;

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut terms: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    if terms.is_empty() {
        return Err(EmbedError::EmptyVocabulary);
    }
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let index: HashMap<&str, u32> = terms
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (t.as_str(), i as u32))
        .collect();

    let sentences: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .filter(|s: &Vec<u32>| s.len() > 1)
        .collect();
    let total_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();

    let dims = config.dims;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = 0.5 / dims as f32;
    let input: Vec<f32> = (0..terms.len() * dims)
        .map(|_| init_rng.gen_range(-half..half))
        .collect();

    let counts: Vec<u64> = terms.iter().map(|(_, c)| *c).collect();
    let keep_prob = config.subsample.map(|s| {
        let corpus: u64 = counts.iter().sum();
        counts
            .iter()
            .map(|&c| {
                let f = c as f64 / (s * corpus as f64);
                ((f.sqrt() + 1.0) / f).min(1.0)
            })
            .collect()
    });

    let trainer = Trainer {
        config,
        input: SharedTable::new(input),
        output: SharedTable::new(vec![0.0; terms.len() * dims]),
        sampler: NegativeSampler::new(&counts),
        keep_prob,
        processed: AtomicU64::new(0),
        scheduled: (total_tokens * config.epochs as u64).max(1),
    };

    let workers = config.workers.min(sentences.len().max(1));
    if workers <= 1 {
        trainer.run_worker(&sentences, worker_seed(config.seed, 0));
    } else {
        let chunk = sentences.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, part) in sentences.chunks(chunk).enumerate() {
                let trainer = &trainer;
                scope.spawn(move || trainer.run_worker(part, worker_seed(config.seed, w)));
            }
        });
    }

    Ok(EmbeddingModel::from_parts(
        config.clone(),
        terms,
        trainer.input.into_vec(),
        trainer.output.into_vec(),
    ))
}

/// Loss and gradients of one skip-gram example:
/// `-log σ(c·p) - Σ log σ(-c·n)` for center `c`, positive context `p`
/// and negatives `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn log_sigmoid(x: f64) -> f64 {
    // -softplus(-x), stable for large |x|
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn sigmoid64(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sgns_loss_and_grad(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let sp = dot(center, positive);
    let mut loss = -log_sigmoid(sp);
    let gp = sigmoid64(sp) - 1.0;
    let mut d_center: Vec<f64> = positive.iter().map(|p| gp * p).collect();
    let d_positive = center.iter().map(|c| gp * c).collect();
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for n in negatives {
        let sn = dot(center, n);
        loss -= log_sigmoid(-sn);
        let gn = sigmoid64(sn);
        for (dc, x) in d_center.iter_mut().zip(n.iter()) {
            *dc += gn * x;
        }
        d_negatives.push(center.iter().map(|c| gn * c).collect());
    }
    SgnsGradient {
        loss,
        center: d_center,
        positive: d_positive,
        negatives: d_negatives,
    }
}
