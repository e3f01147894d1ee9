//! End-to-end run driven by a [`RunConfig`], recording a manifest of every
//! stage's inputs and outputs with their SHA-256 digests.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::commands::{self, EvalInputs, PositiveFilter, TrainInputs};
use super::{create_file, open_file, require, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: Status,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub workers: usize,
    pub status: Status,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        Ok(serde_json::from_str(&super::read_to_string(path)?)?)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut r = open_file(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Output locations inside the run directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Layout { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn filtered(&self) -> PathBuf {
        self.path("filtered.jsonl")
    }
    pub fn filter_stats(&self) -> PathBuf {
        self.path("filter_stats.json")
    }
    pub fn tokens(&self) -> PathBuf {
        self.path("tokens.jsonl")
    }
    pub fn vocab(&self) -> PathBuf {
        self.path("vocab.json")
    }
    pub fn embeddings(&self) -> PathBuf {
        self.path("embeddings.boem")
    }
    pub fn model(&self) -> PathBuf {
        self.path("model.trvl")
    }
    pub fn report(&self) -> PathBuf {
        self.path("eval_report.json")
    }
    pub fn roc(&self) -> PathBuf {
        self.path("roc.csv")
    }
    pub fn predictions(&self) -> PathBuf {
        self.path("predictions.csv")
    }
    pub fn dow(&self) -> PathBuf {
        self.path("dow.json")
    }
    pub fn users(&self) -> PathBuf {
        self.path("users.json")
    }
    pub fn hashtags(&self) -> PathBuf {
        self.path("hashtags.json")
    }
    pub fn heatmap(&self) -> PathBuf {
        self.path("heatmap.csv")
    }
    pub fn heatmap_geojson(&self) -> PathBuf {
        self.path("heatmap.geojson")
    }
    pub fn manifest(&self) -> PathBuf {
        self.path(MANIFEST_FILE)
    }
}

struct Recorder {
    layout: Layout,
    manifest: Manifest,
}

impl Recorder {
    /// Paths inside the run directory are recorded relative to it.
    fn label(&self, p: &Path) -> String {
        p.strip_prefix(&self.layout.dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }

    fn digests(&self, paths: &[PathBuf]) -> Vec<FileDigest> {
        paths
            .iter()
            .filter(|p| p.exists())
            .map(|p| FileDigest {
                path: self.label(p),
                sha256: sha256_file(p).unwrap_or_default(),
            })
            .collect()
    }

    fn save(&self) -> Result<()> {
        let mut w = create_file(&self.layout.manifest())?;
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Runs one stage; on failure the manifest keeps whatever it wrote.
    fn stage<F>(&mut self, name: &str, inputs: &[PathBuf], outputs: &[PathBuf], body: F) -> Result<()>
    where
        F: FnOnce() -> Result<()>,
    {
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            status: Status::Running,
            inputs: self.digests(inputs),
            outputs: Vec::new(),
            error: None,
        });
        self.save()?;
        let result = body().with_context(|| format!("stage {name} failed"));
        let outputs = self.digests(outputs);
        let rec = self.manifest.stages.last_mut().expect("stage just pushed");
        rec.outputs = outputs;
        match &result {
            Ok(()) => rec.status = Status::Ok,
            Err(e) => {
                rec.status = Status::Failed;
                rec.error = Some(format!("{e:#}"));
                self.manifest.status = Status::Failed;
            }
        }
        self.save()?;
        result
    }
}

/// Runs filter → preprocess → vocab → embed → train → eval → analyze into
/// `paths.output_dir`, writing `manifest.json` after every stage.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest> {
    let paths = &cfg.paths;
    let need = |p: &Option<PathBuf>, key: &str| p.clone().ok_or_else(|| anyhow!("config is missing paths.{key}"));
    let input = need(&paths.input, "input")?;
    let train_ann = need(&paths.train_annotations, "train_annotations")?;
    let test_ann = need(&paths.test_annotations, "test_annotations")?;
    let out_dir = need(&paths.output_dir, "output_dir")?;
    for p in [&input, &train_ann, &test_ann] {
        require(p)?;
    }
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let l = Layout::new(&out_dir);
    let mut rec = Recorder {
        layout: l.clone(),
        manifest: Manifest {
            seed: cfg.seed,
            workers: cfg.workers,
            status: Status::Running,
            config: cfg.clone(),
            stages: Vec::new(),
        },
    };
    let city = cfg.city()?;
    let features = cfg.classifier.features;
    let vocab_in = features.uses_bow().then(|| l.vocab());
    let emb_in = features.uses_boe().then(|| l.embeddings());
    let mut feature_files: Vec<PathBuf> = vocab_in.iter().chain(&emb_in).cloned().collect();

    rec.stage("filter", std::slice::from_ref(&input), &[l.filtered(), l.filter_stats()], || {
        let stats = commands::filter_file(&input, Some(&l.filtered()), city, &cfg.corpus.language)?;
        commands::write_stats(&l.filter_stats(), &stats)
    })?;
    rec.stage("preprocess", &[l.filtered()], &[l.tokens()], || {
        commands::preprocess_file(&l.filtered(), &l.tokens()).map(drop)
    })?;
    rec.stage("vocab", &[l.tokens(), train_ann.clone()], &[l.vocab()], || {
        let v = &cfg.vocab;
        commands::vocab_file(&l.tokens(), &l.vocab(), v.max_terms, v.max_df_ratio, Some(&train_ann)).map(drop)
    })?;
    rec.stage("embed", &[l.tokens()], &[l.embeddings()], || {
        commands::embed_train_file(&l.tokens(), &l.embeddings(), &cfg.embed_config()).map(drop)
    })?;

    let mut train_inputs = vec![l.tokens(), train_ann.clone(), test_ann.clone()];
    train_inputs.append(&mut feature_files.clone());
    rec.stage("train", &train_inputs, &[l.model()], || {
        let inputs = TrainInputs {
            tokens: &l.tokens(),
            annotations: &train_ann,
            vocab: vocab_in.as_deref(),
            embeddings: emb_in.as_deref(),
            held_out: Some(&test_ann),
        };
        commands::train_file(&inputs, cfg, &l.model()).map(drop)
    })?;

    let mut eval_inputs = vec![l.model(), l.tokens(), test_ann.clone(), train_ann.clone()];
    eval_inputs.append(&mut feature_files.clone());
    rec.stage("eval", &eval_inputs, &[l.report(), l.roc()], || {
        let inputs = EvalInputs {
            model: &l.model(),
            tokens: &l.tokens(),
            annotations: &test_ann,
            vocab: vocab_in.as_deref(),
            embeddings: emb_in.as_deref(),
            train_annotations: Some(&train_ann),
        };
        commands::eval_file(&inputs, Some(&l.report()), Some(&l.roc()), cfg.workers).map(drop)
    })?;

    let mut analyze_inputs = vec![l.filtered(), l.tokens(), l.model()];
    analyze_inputs.append(&mut feature_files);
    let analyze_outputs = [
        l.predictions(),
        l.dow(),
        l.users(),
        l.hashtags(),
        l.heatmap(),
        l.heatmap_geojson(),
    ];
    rec.stage("analyze", &analyze_inputs, &analyze_outputs, || {
        commands::predict_file(
            &l.model(),
            &l.tokens(),
            vocab_in.as_deref(),
            emb_in.as_deref(),
            &l.predictions(),
            cfg.workers,
        )?;
        let all = commands::read_tweets(&l.filtered())?;
        commands::analyze_users(&all, &l.users())?;
        let model = l.model();
        let pf = PositiveFilter {
            model: &model,
            vocab: vocab_in.as_deref(),
            embeddings: emb_in.as_deref(),
            workers: cfg.workers,
        };
        let travel = commands::analysis_input(&l.filtered(), Some(&pf))?;
        let an = &cfg.analytics;
        commands::analyze_dow(&travel, an.utc_offset_minutes, &l.dow())?;
        commands::analyze_hashtags(&travel, an.top_hashtags, &l.hashtags())?;
        commands::analyze_heatmap(
            &travel,
            city,
            an.grid_rows,
            an.grid_cols,
            &l.heatmap(),
            Some(&l.heatmap_geojson()),
        )
    })?;

    rec.manifest.status = Status::Ok;
    rec.save()?;
    Ok(rec.manifest)
}
