//! Command-line front end. Every subcommand reads and writes files so that
//! stages can be rerun on their own.

pub mod commands;
pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::classify::{FeatureKind, ModelKind};
use commands::{EvalInputs, PositiveFilter, TrainInputs};
pub use config::RunConfig;

/// A referenced input does not exist. Maps to exit status 2.
#[derive(Debug)]
pub struct MissingFile(pub PathBuf);

impl fmt::Display for MissingFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no such file: {}", self.0.display())
    }
}

impl std::error::Error for MissingFile {}

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingFile(path.to_path_buf()).into())
    }
}

pub fn open_file(path: &Path) -> Result<BufReader<File>> {
    require(path)?;
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    require(path)?;
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Creates `path` and any missing parent directories.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[derive(Debug, Parser)]
#[command(name = "travel-tweets", version, about = "Geo-filter, classify and analyse archived tweets")]
pub struct Cli {
    /// Master random seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 selects the reproducible code paths.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep tweets located in the city with the wanted language.
    Filter(FilterArgs),
    /// Count how records resolve against the city without writing them.
    Stats(StatsArgs),
    /// Normalize and tokenize tweet text.
    Preprocess(IoArgs),
    /// Build a capped vocabulary from tokenized docs.
    Vocab(VocabArgs),
    /// Train or query word embeddings.
    #[command(subcommand)]
    Embed(EmbedCommand),
    /// Train a classifier on annotated tweets.
    Train(TrainArgs),
    /// Score tokenized docs with a trained model.
    Predict(PredictArgs),
    /// Evaluate a model against held-out annotations.
    Eval(EvalArgs),
    /// Select annotation candidates by term matching.
    Bootstrap(BootstrapArgs),
    /// Temporal, user, hashtag and spatial aggregates.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run every stage from the configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CityArgs {
    /// `rio`, `sao_paulo` or `sw_lat,sw_lon,ne_lat,ne_lon`.
    #[arg(long, allow_hyphen_values = true)]
    pub city: Option<String>,
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the resolution counts as JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[command(flatten)]
    pub city: CityArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub city: CityArgs,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    /// Tokenized docs (JSON lines).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub max_terms: Option<usize>,
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
    /// Only count docs whose ids appear in this annotation CSV.
    #[arg(long)]
    pub ids: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EmbedCommand {
    /// Train skip-gram embeddings on tokenized docs.
    Train(EmbedTrainArgs),
    /// Print the nearest terms by cosine similarity.
    Neighbors(NeighborsArgs),
}

#[derive(Debug, Args)]
pub struct EmbedTrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    /// Frequent-word subsampling threshold.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Single-threaded, reproducible training.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub term: String,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub features: Option<FeatureKind>,
    /// Tokenized docs.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[command(flatten)]
    pub feature_files: FeatureArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Test annotations; training fails if any id overlaps.
    #[arg(long)]
    pub held_out: Option<PathBuf>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// `sqrt`, `all` or a count.
    #[arg(long)]
    pub max_features: Option<String>,
    /// 0 means unlimited.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Tokenized docs.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub feature_files: FeatureArgs,
    /// CSV `tweet_id,score,label`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Tokenized docs containing the test tweets.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[command(flatten)]
    pub feature_files: FeatureArgs,
    /// JSON report; defaults to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// ROC points as `fpr,tpr` CSV.
    #[arg(long)]
    pub roc: Option<PathBuf>,
    /// Training annotations, checked for overlap with the test set.
    #[arg(long)]
    pub train_annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// One term per line; defaults to the configured terms.
    #[arg(long)]
    pub terms_file: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Tweets per local weekday.
    Dow(DowArgs),
    /// Distribution of tweets per user.
    Users(AnalyzeArgs),
    /// Most frequent hashtags.
    Hashtags(HashtagArgs),
    /// Point counts on a lat/lon grid.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tweet records (JSON lines).
    #[arg(long)]
    pub input: PathBuf,
    /// `.csv` selects CSV, anything else JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Only tweets the model labels travel.
    #[arg(long, requires = "model_file")]
    pub positives_only: bool,
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[command(flatten)]
    pub feature_files: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct DowArgs {
    #[command(flatten)]
    pub common: AnalyzeArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub utc_offset_minutes: Option<i64>,
}

#[derive(Debug, Args)]
pub struct HashtagArgs {
    #[command(flatten)]
    pub common: AnalyzeArgs,
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub common: AnalyzeArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub city: Option<String>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub geojson: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Overrides `paths.input`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Overrides `paths.output_dir`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<MissingFile>()) {
                2
            } else {
                1
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        anyhow::ensure!(w > 0, "--workers must be at least 1");
        cfg.workers = w;
    }
    Ok(cfg)
}

fn apply_city(cfg: &mut RunConfig, args: &CityArgs) {
    if let Some(c) = &args.city {
        cfg.corpus.city = config::CitySpec::Named(c.clone());
    }
    if let Some(l) = &args.language {
        cfg.corpus.language = l.clone();
    }
}

fn positive_filter<'a>(a: &'a AnalyzeArgs, workers: usize) -> Option<PositiveFilter<'a>> {
    if !a.positives_only {
        return None;
    }
    Some(PositiveFilter {
        model: a.model_file.as_deref().expect("clap enforces --model-file"),
        vocab: a.feature_files.vocab.as_deref(),
        embeddings: a.feature_files.embeddings.as_deref(),
        workers,
    })
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Filter(a) => {
            apply_city(&mut cfg, &a.city);
            let stats = commands::filter_file(&a.input, Some(&a.output), cfg.city()?, &cfg.corpus.language)?;
            if let Some(p) = &a.stats {
                commands::write_stats(p, &stats)?;
            }
            eprintln!("kept {} of {} records", stats.lang_and_inside, stats.total);
        }
        Command::Stats(a) => {
            apply_city(&mut cfg, &a.city);
            let stats = commands::filter_file(&a.input, None, cfg.city()?, &cfg.corpus.language)?;
            match &a.output {
                Some(p) => commands::write_stats(p, &stats)?,
                None => println!("{}", serde_json::to_string_pretty(&stats)?),
            }
        }
        Command::Preprocess(a) => {
            let n = commands::preprocess_file(&a.input, &a.output)?;
            eprintln!("tokenized {n} tweets");
        }
        Command::Vocab(a) => {
            let v = commands::vocab_file(
                &a.input,
                &a.output,
                a.max_terms.unwrap_or(cfg.vocab.max_terms),
                a.max_df_ratio.unwrap_or(cfg.vocab.max_df_ratio),
                a.ids.as_deref(),
            )?;
            eprintln!("vocabulary of {} terms from {} docs", v.len(), v.n_docs());
        }
        Command::Embed(EmbedCommand::Train(a)) => {
            let e = &mut cfg.embed;
            e.dims = a.dims.unwrap_or(e.dims);
            e.window = a.window.unwrap_or(e.window);
            e.epochs = a.epochs.unwrap_or(e.epochs);
            e.negatives = a.negatives.unwrap_or(e.negatives);
            e.min_count = a.min_count.unwrap_or(e.min_count);
            e.learning_rate = a.learning_rate.unwrap_or(e.learning_rate);
            e.subsample = a.subsample.unwrap_or(e.subsample);
            if a.deterministic {
                cfg.workers = 1;
            }
            let m = commands::embed_train_file(&a.input, &a.output, &cfg.embed_config())?;
            eprintln!("{} vectors of {} dims", m.vocab_len(), m.dims());
        }
        Command::Embed(EmbedCommand::Neighbors(a)) => {
            for (term, cos) in commands::neighbors(&a.model_file, &a.term, a.k)? {
                println!("{term}\t{cos:.4}");
            }
        }
        Command::Train(a) => {
            let c = &mut cfg.classifier;
            c.model = a.model.unwrap_or(c.model);
            c.features = a.features.unwrap_or(c.features);
            c.l2 = a.l2.unwrap_or(c.l2);
            c.epochs = a.epochs.unwrap_or(c.epochs);
            c.learning_rate = a.learning_rate.unwrap_or(c.learning_rate);
            c.standardize |= a.standardize;
            c.n_trees = a.n_trees.unwrap_or(c.n_trees);
            if let Some(m) = a.max_features {
                c.max_features = config::MaxFeaturesSpec::Named(m);
            }
            c.max_depth = a.max_depth.unwrap_or(c.max_depth);
            let inputs = TrainInputs {
                tokens: &a.input,
                annotations: &a.annotations,
                vocab: a.feature_files.vocab.as_deref(),
                embeddings: a.feature_files.embeddings.as_deref(),
                held_out: a.held_out.as_deref(),
            };
            commands::train_file(&inputs, &cfg, &a.output)?;
        }
        Command::Predict(a) => {
            let n = commands::predict_file(
                &a.model_file,
                &a.input,
                a.feature_files.vocab.as_deref(),
                a.feature_files.embeddings.as_deref(),
                &a.output,
                cfg.workers,
            )?;
            eprintln!("{n} tweets labelled travel");
        }
        Command::Eval(a) => {
            let inputs = EvalInputs {
                model: &a.model_file,
                tokens: &a.test,
                annotations: &a.annotations,
                vocab: a.feature_files.vocab.as_deref(),
                embeddings: a.feature_files.embeddings.as_deref(),
                train_annotations: a.train_annotations.as_deref(),
            };
            let r = commands::eval_file(&inputs, a.report.as_deref(), a.roc.as_deref(), cfg.workers)?;
            if a.report.is_none() {
                println!("{}", r.to_json());
            }
            eprintln!("precision {:.4} recall {:.4} f1 {:.4} auc {:.4}", r.precision, r.recall, r.f1, r.auc);
        }
        Command::Bootstrap(a) => {
            let q = match &a.terms_file {
                Some(p) => commands::read_terms(p)?,
                None => cfg.term_query()?,
            };
            let n = commands::bootstrap_file(&a.input, &q, &a.output)?;
            eprintln!("{n} candidates");
        }
        Command::Analyze(cmd) => analyze(cmd, &cfg)?,
        Command::Pipeline(a) => {
            if let Some(i) = a.input {
                cfg.paths.input = Some(i);
            }
            if let Some(o) = a.output_dir {
                cfg.paths.output_dir = Some(o);
            }
            pipeline::run_pipeline(&cfg)?;
        }
    }
    Ok(())
}

fn analyze(cmd: AnalyzeCommand, cfg: &RunConfig) -> Result<()> {
    let an = &cfg.analytics;
    match cmd {
        AnalyzeCommand::Dow(a) => {
            let tweets = commands::analysis_input(&a.common.input, positive_filter(&a.common, cfg.workers).as_ref())?;
            commands::analyze_dow(
                &tweets,
                a.utc_offset_minutes.unwrap_or(an.utc_offset_minutes),
                &a.common.output,
            )?;
        }
        AnalyzeCommand::Users(a) => {
            let tweets = commands::analysis_input(&a.input, positive_filter(&a, cfg.workers).as_ref())?;
            commands::analyze_users(&tweets, &a.output)?;
        }
        AnalyzeCommand::Hashtags(a) => {
            let tweets = commands::analysis_input(&a.common.input, positive_filter(&a.common, cfg.workers).as_ref())?;
            commands::analyze_hashtags(&tweets, a.top.unwrap_or(an.top_hashtags), &a.common.output)?;
        }
        AnalyzeCommand::Heatmap(a) => {
            let tweets = commands::analysis_input(&a.common.input, positive_filter(&a.common, cfg.workers).as_ref())?;
            let bounds = match &a.city {
                Some(c) => config::parse_city(c)?,
                None => cfg.city()?,
            };
            commands::analyze_heatmap(
                &tweets,
                bounds,
                a.rows.unwrap_or(an.grid_rows),
                a.cols.unwrap_or(an.grid_cols),
                &a.common.output,
                a.geojson.as_deref(),
            )?;
        }
    }
    Ok(())
}
