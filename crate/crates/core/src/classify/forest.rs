//! Random forest of gini-split decision trees over bootstrap resamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_labels, ClassifyError, Dataset, FeatureVector, Label, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    /// ⌈√d⌉ candidate features per split.
    Sqrt,
    Count(usize),
    All,
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(k) => k,
            MaxFeatures::All => d,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
    /// Threads used to grow trees. Trees are seeded individually, so the
    /// forest does not depend on this.
    pub workers: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
            seed: 1,
            workers: 1,
        }
    }
}

/// Tree nodes in preorder. A split's left child is the next node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split { feature: u32, threshold: f32, right: u32 },
    Leaf { neg: u32, pos: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub seed: u64,
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Class counts of the leaf `x` lands in.
    pub fn leaf_counts(&self, x: &FeatureVector) -> (u32, u32) {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { neg, pos } => return (neg, pos),
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    i = if x.value(feature as usize) <= threshold {
                        i + 1
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn votes_positive(&self, x: &FeatureVector) -> bool {
        let (neg, pos) = self.leaf_counts(x);
        pos > neg
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { right, .. } => 1 + walk(nodes, i + 1).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks that the node list encodes exactly one well-formed tree.
    pub(crate) fn validate(&self, dim: usize) -> Result<(), String> {
        fn end_of(nodes: &[Node], i: usize, dim: usize, depth: usize) -> Result<usize, String> {
            if depth > nodes.len() {
                return Err("tree nesting exceeds node count".into());
            }
            match nodes.get(i) {
                None => Err(format!("node {i} out of range")),
                Some(Node::Leaf { .. }) => Ok(i + 1),
                Some(&Node::Split {
                    feature,
                    threshold,
                    right,
                }) => {
                    if feature as usize >= dim {
                        return Err(format!("split feature {feature} outside {dim} dimensions"));
                    }
                    if !threshold.is_finite() {
                        return Err("non-finite threshold".into());
                    }
                    let left_end = end_of(nodes, i + 1, dim, depth + 1)?;
                    if right as usize != left_end {
                        return Err(format!("node {i} right child {right} should be {left_end}"));
                    }
                    end_of(nodes, left_end, dim, depth + 1)
                }
            }
        }
        let end = end_of(&self.nodes, 0, dim, 0)?;
        if end != self.nodes.len() {
            return Err("trailing nodes after tree".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub(crate) schema: Schema,
    pub(crate) config: ForestConfig,
    pub(crate) trees: Vec<Tree>,
}

/// Which training rows one tree saw.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    /// Draw count per training example.
    pub counts: Vec<u32>,
    /// Examples never drawn, ascending.
    pub oob: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct ForestFit {
    pub model: ForestModel,
    pub bags: Vec<Bag>,
}

/// Gini impurity of a two-class node.
pub fn gini(neg: f64, pos: f64) -> f64 {
    let total = neg + pos;
    if total <= 0.0 {
        return 0.0;
    }
    let (p, q) = (neg / total, pos / total);
    1.0 - p * p - q * q
}

/// Column-major copy of the non-zero feature values.
struct Columns {
    cols: Vec<Vec<(u32, f32)>>,
}

impl Columns {
    fn build(data: &Dataset) -> Self {
        let mut cols = vec![Vec::new(); data.schema.total_dim()];
        for (s, ex) in data.examples.iter().enumerate() {
            ex.features.for_each(|j, v| {
                if v != 0.0 {
                    cols[j].push((s as u32, v as f32));
                }
            });
        }
        Columns { cols }
    }
}

struct Candidate {
    feature: u32,
    threshold: f32,
    decrease: f64,
}

struct Grower<'a> {
    data: &'a Dataset,
    columns: &'a Columns,
    positive: Vec<bool>,
    weight: Vec<u32>,
    stamp: Vec<u32>,
    current: u32,
    perm: Vec<u32>,
    max_features: usize,
    max_depth: Option<usize>,
    min_samples_split: usize,
    rng: ChaCha8Rng,
    entries: Vec<(f32, f64, f64)>,
}

impl Grower<'_> {
    fn class_weights(&self, samples: &[u32]) -> (f64, f64) {
        let (mut neg, mut pos) = (0.0, 0.0);
        for &s in samples {
            let w = self.weight[s as usize] as f64;
            if self.positive[s as usize] {
                pos += w;
            } else {
                neg += w;
            }
        }
        (neg, pos)
    }

    /// Best threshold on `feature` among the node's samples, or `None` if the
    /// feature is constant there.
    fn best_threshold(&mut self, feature: usize, samples: &[u32], neg: f64, pos: f64) -> Option<(f32, f64)> {
        self.entries.clear();
        let col = &self.columns.cols[feature];
        let (mut nz_neg, mut nz_pos) = (0.0, 0.0);
        let mut push = |entries: &mut Vec<(f32, f64, f64)>, s: u32, v: f32, weight: &[u32], positive: &[bool]| {
            let w = weight[s as usize] as f64;
            if positive[s as usize] {
                nz_pos += w;
                entries.push((v, 0.0, w));
            } else {
                nz_neg += w;
                entries.push((v, w, 0.0));
            }
        };
        if samples.len() * 8 < col.len() {
            for &s in samples {
                let v = self.data.examples[s as usize].features.value(feature);
                if v != 0.0 {
                    push(&mut self.entries, s, v, &self.weight, &self.positive);
                }
            }
        } else {
            for &(s, v) in col {
                if self.stamp[s as usize] == self.current {
                    push(&mut self.entries, s, v, &self.weight, &self.positive);
                }
            }
        }
        let (z_neg, z_pos) = (neg - nz_neg, pos - nz_pos);
        if z_neg + z_pos > 0.0 {
            self.entries.push((0.0, z_neg, z_pos));
        }
        self.entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total = neg + pos;
        let parent = total * gini(neg, pos);
        let (mut l_neg, mut l_pos) = (0.0, 0.0);
        let mut best: Option<(f32, f64)> = None;
        let n = self.entries.len();
        let mut i = 0;
        while i < n {
            let v = self.entries[i].0;
            while i < n && self.entries[i].0 == v {
                l_neg += self.entries[i].1;
                l_pos += self.entries[i].2;
                i += 1;
            }
            if i == n {
                break;
            }
            let next = self.entries[i].0;
            let (r_neg, r_pos) = (neg - l_neg, pos - l_pos);
            let child = (l_neg + l_pos) * gini(l_neg, l_pos) + (r_neg + r_pos) * gini(r_neg, r_pos);
            let decrease = parent - child;
            if best.is_none_or(|(_, d)| decrease > d) {
                best = Some((split_point(v, next), decrease));
            }
        }
        best
    }

    fn find_split(&mut self, samples: &[u32], neg: f64, pos: f64) -> Option<Candidate> {
        for &s in samples {
            self.stamp[s as usize] = self.current;
        }
        let d = self.perm.len();
        let mut best: Option<Candidate> = None;
        for k in 0..d {
            if k >= self.max_features && best.is_some() {
                break;
            }
            let pick = self.rng.gen_range(k..d);
            self.perm.swap(k, pick);
            let feature = self.perm[k] as usize;
            if let Some((threshold, decrease)) = self.best_threshold(feature, samples, neg, pos) {
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(Candidate {
                        feature: feature as u32,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, root: Vec<u32>) -> Vec<Node> {
        struct Task {
            samples: Vec<u32>,
            depth: usize,
            patch: Option<usize>,
        }
        let mut nodes = Vec::new();
        let mut stack = vec![Task {
            samples: root,
            depth: 0,
            patch: None,
        }];
        while let Some(task) = stack.pop() {
            let here = nodes.len();
            if let Some(parent) = task.patch {
                if let Node::Split { right, .. } = &mut nodes[parent] {
                    *right = here as u32;
                }
            }
            let (neg, pos) = self.class_weights(&task.samples);
            let leaf = Node::Leaf {
                neg: neg as u32,
                pos: pos as u32,
            };
            let stop = neg == 0.0
                || pos == 0.0
                || ((neg + pos) as usize) < self.min_samples_split
                || self.max_depth.is_some_and(|m| task.depth >= m);
            if stop {
                nodes.push(leaf);
                continue;
            }
            self.current += 1;
            let Some(split) = self.find_split(&task.samples, neg, pos) else {
                nodes.push(leaf);
                continue;
            };
            let f = split.feature as usize;
            let (left, right): (Vec<u32>, Vec<u32>) = task
                .samples
                .into_iter()
                .partition(|&s| self.data.examples[s as usize].features.value(f) <= split.threshold);
            debug_assert!(!left.is_empty() && !right.is_empty());
            nodes.push(Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                right: 0,
            });
            stack.push(Task {
                samples: right,
                depth: task.depth + 1,
                patch: Some(here),
            });
            stack.push(Task {
                samples: left,
                depth: task.depth + 1,
                patch: None,
            });
        }
        nodes
    }
}

/// Threshold strictly separating `lo < hi` under the `x <= t` rule.
fn split_point(lo: f32, hi: f32) -> f32 {
    let mid = ((lo as f64 + hi as f64) / 2.0) as f32;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

fn grow_tree(data: &Dataset, columns: &Columns, config: &ForestConfig, seed: u64) -> (Tree, Bag) {
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; n];
    if config.bootstrap {
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
    } else {
        counts.iter_mut().for_each(|c| *c = 1);
    }
    let drawn: Vec<u32> = (0..n as u32).filter(|&s| counts[s as usize] > 0).collect();
    let oob: Vec<u32> = (0..n as u32).filter(|&s| counts[s as usize] == 0).collect();
    let d = data.schema.total_dim();
    let mut grower = Grower {
        data,
        columns,
        positive: data.examples.iter().map(|e| e.label == Label::Travel).collect(),
        weight: counts.clone(),
        stamp: vec![0; n],
        current: 0,
        perm: (0..d as u32).collect(),
        max_features: config.max_features.resolve(d),
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        rng,
        entries: Vec::new(),
    };
    let nodes = grower.grow(drawn);
    (Tree { seed, nodes }, Bag { counts, oob })
}

pub fn train_random_forest(data: &Dataset, config: &ForestConfig) -> Result<ForestFit, ClassifyError> {
    if config.n_trees == 0 {
        return Err(ClassifyError::InvalidParameter("n_trees must be at least 1".into()));
    }
    if data.schema.total_dim() == 0 {
        return Err(ClassifyError::InvalidParameter("empty feature schema".into()));
    }
    if let MaxFeatures::Count(0) = config.max_features {
        return Err(ClassifyError::InvalidParameter("max_features must be at least 1".into()));
    }
    check_labels(data)?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.n_trees).map(|_| master.gen()).collect();
    let columns = Columns::build(data);
    let workers = config.workers.clamp(1, config.n_trees);

    let grown: Vec<(Tree, Bag)> = if workers == 1 {
        seeds.iter().map(|&s| grow_tree(data, &columns, config, s)).collect()
    } else {
        let chunk = seeds.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|part| {
                    let columns = &columns;
                    scope.spawn(move || {
                        part.iter()
                            .map(|&s| grow_tree(data, columns, config, s))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("tree worker panicked"))
                .collect()
        })
    };
    let (trees, bags) = grown.into_iter().unzip();
    Ok(ForestFit {
        model: ForestModel {
            schema: data.schema,
            config: config.clone(),
            trees,
        },
        bags,
    })
}

impl ForestModel {
    pub fn from_trees(schema: Schema, config: ForestConfig, trees: Vec<Tree>) -> Result<Self, ClassifyError> {
        if trees.is_empty() {
            return Err(ClassifyError::InvalidParameter("forest has no trees".into()));
        }
        for (i, t) in trees.iter().enumerate() {
            t.validate(schema.total_dim())
                .map_err(|e| ClassifyError::InvalidParameter(format!("tree {i}: {e}")))?;
        }
        Ok(ForestModel { schema, config, trees })
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Fraction of trees voting positive.
    pub fn predict_score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        self.schema.expect(x.schema())?;
        let votes = self.trees.iter().filter(|t| t.votes_positive(x)).count();
        Ok(votes as f64 / self.trees.len() as f64)
    }

    pub fn threshold(&self) -> f64 {
        0.5
    }
}
