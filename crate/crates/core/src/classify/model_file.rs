//! `TRVL` classifier files.
//!
//! ```text
//! "TRVL" | version u32 | kind u8 (0 svm, 1 logreg, 2 rf) | vocab_dim u32 | embed_dim u32
//! linear: l2 f64 | learning_rate f64 | epochs u32 | seed u64 | shuffle u8
//!         | optimizer u8 (0 sgd, 1 full batch) | standardize u8 | bias f32 | weights f32 × total_dim
//! forest: n_trees u32 | max_features tag u8 (0 sqrt, 1 count, 2 all) | max_features u32
//!         | max_depth u32 (u32::MAX = unlimited) | min_samples_split u32 | bootstrap u8 | seed u64
//!         then per tree: seed u64 | node_count u32 | nodes in preorder
//!         split node: 0u8 | feature u32 | threshold f32 | right child index u32
//!         leaf node:  1u8 | neg u32 | pos u32
//! ```
//!
//! Everything is little-endian.

use std::io::{self, Read, Write};

use super::{
    Classifier, ClassifyError, ForestConfig, ForestModel, LinearConfig, LinearModel, LossKind, MaxFeatures,
    ModelKind, Node, Optimizer, Schema, Tree,
};
use crate::binio::*;

const MAGIC: &[u8; 4] = b"TRVL";
const VERSION: u32 = 1;
const NO_DEPTH_LIMIT: u32 = u32::MAX;

fn invalid(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::Format(io::Error::new(io::ErrorKind::InvalidData, msg.into()))
}

fn write_bool<W: Write>(w: &mut W, v: bool) -> io::Result<()> {
    write_u8(w, v as u8)
}

fn read_bool<R: Read>(r: &mut R) -> Result<bool, ClassifyError> {
    match read_u8(r)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(invalid(format!("bad boolean byte {other}"))),
    }
}

impl Classifier {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        write_u32(&mut w, VERSION)?;
        write_u8(
            &mut w,
            match self.kind() {
                ModelKind::Svm => 0,
                ModelKind::Logreg => 1,
                ModelKind::Rf => 2,
            },
        )?;
        let schema = self.schema();
        write_u32(&mut w, schema.vocab_dim as u32)?;
        write_u32(&mut w, schema.embed_dim as u32)?;
        match self {
            Classifier::Linear(m) => write_linear(&mut w, m)?,
            Classifier::Forest(m) => write_forest(&mut w, m)?,
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ClassifyError> {
        expect_magic(&mut r, MAGIC)?;
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(invalid(format!("unsupported TRVL version {version}")));
        }
        let kind = read_u8(&mut r)?;
        let schema = Schema::new(read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        let model = match kind {
            0 => Classifier::Linear(read_linear(&mut r, schema, LossKind::Hinge)?),
            1 => Classifier::Linear(read_linear(&mut r, schema, LossKind::Logistic)?),
            2 => Classifier::Forest(read_forest(&mut r, schema)?),
            other => return Err(invalid(format!("unknown model kind {other}"))),
        };
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(invalid("trailing bytes after model"));
        }
        Ok(model)
    }
}

fn write_linear<W: Write>(w: &mut W, m: &LinearModel) -> io::Result<()> {
    let c = &m.config;
    write_f64(w, c.l2)?;
    write_f64(w, c.learning_rate)?;
    write_u32(w, c.epochs as u32)?;
    write_u64(w, c.seed)?;
    write_bool(w, c.shuffle)?;
    write_u8(
        w,
        match c.optimizer {
            Optimizer::Sgd => 0,
            Optimizer::FullBatch => 1,
        },
    )?;
    write_bool(w, c.standardize)?;
    write_f32(w, m.bias)?;
    write_f32s(w, &m.weights)
}

fn read_linear<R: Read>(r: &mut R, schema: Schema, loss: LossKind) -> Result<LinearModel, ClassifyError> {
    let l2 = read_f64(r)?;
    let learning_rate = read_f64(r)?;
    let epochs = read_u32(r)? as usize;
    let seed = read_u64(r)?;
    let shuffle = read_bool(r)?;
    let optimizer = match read_u8(r)? {
        0 => Optimizer::Sgd,
        1 => Optimizer::FullBatch,
        other => return Err(invalid(format!("unknown optimizer {other}"))),
    };
    let standardize = read_bool(r)?;
    let bias = read_f32(r)?;
    let weights = read_f32s(r, schema.total_dim())?;
    let config = LinearConfig {
        loss,
        l2,
        epochs,
        learning_rate,
        seed,
        shuffle,
        optimizer,
        standardize,
    };
    LinearModel::from_parameters(schema, config, weights, bias).map_err(|e| invalid(e.to_string()))
}

fn write_forest<W: Write>(w: &mut W, m: &ForestModel) -> io::Result<()> {
    let c = &m.config;
    write_u32(w, m.trees.len() as u32)?;
    let (tag, count) = match c.max_features {
        MaxFeatures::Sqrt => (0, 0),
        MaxFeatures::Count(k) => (1, k as u32),
        MaxFeatures::All => (2, 0),
    };
    write_u8(w, tag)?;
    write_u32(w, count)?;
    write_u32(w, c.max_depth.map_or(NO_DEPTH_LIMIT, |d| d as u32))?;
    write_u32(w, c.min_samples_split as u32)?;
    write_bool(w, c.bootstrap)?;
    write_u64(w, c.seed)?;
    for tree in &m.trees {
        write_u64(w, tree.seed)?;
        write_u32(w, tree.nodes.len() as u32)?;
        for node in &tree.nodes {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    write_u8(w, 0)?;
                    write_u32(w, feature)?;
                    write_f32(w, threshold)?;
                    write_u32(w, right)?;
                }
                Node::Leaf { neg, pos } => {
                    write_u8(w, 1)?;
                    write_u32(w, neg)?;
                    write_u32(w, pos)?;
                }
            }
        }
    }
    Ok(())
}

fn read_forest<R: Read>(r: &mut R, schema: Schema) -> Result<ForestModel, ClassifyError> {
    let n_trees = read_u32(r)? as usize;
    let tag = read_u8(r)?;
    let count = read_u32(r)? as usize;
    let max_features = match tag {
        0 => MaxFeatures::Sqrt,
        1 => MaxFeatures::Count(count),
        2 => MaxFeatures::All,
        other => return Err(invalid(format!("unknown max_features tag {other}"))),
    };
    let depth = read_u32(r)?;
    let min_samples_split = read_u32(r)? as usize;
    let bootstrap = read_bool(r)?;
    let seed = read_u64(r)?;
    let config = ForestConfig {
        n_trees,
        max_features,
        max_depth: (depth != NO_DEPTH_LIMIT).then_some(depth as usize),
        min_samples_split,
        bootstrap,
        seed,
        workers: 1,
    };
    let mut trees = Vec::with_capacity(n_trees.min(4096));
    for _ in 0..n_trees {
        let tree_seed = read_u64(r)?;
        let n_nodes = read_u32(r)? as usize;
        let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
        for _ in 0..n_nodes {
            nodes.push(match read_u8(r)? {
                0 => Node::Split {
                    feature: read_u32(r)?,
                    threshold: read_f32(r)?,
                    right: read_u32(r)?,
                },
                1 => Node::Leaf {
                    neg: read_u32(r)?,
                    pos: read_u32(r)?,
                },
                other => return Err(invalid(format!("unknown node tag {other}"))),
            });
        }
        trees.push(Tree { seed: tree_seed, nodes });
    }
    ForestModel::from_trees(schema, config, trees).map_err(|e| invalid(e.to_string()))
}
