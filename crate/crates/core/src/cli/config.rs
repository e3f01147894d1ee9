//! TOML run configuration. Every key is optional; unknown keys are errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::analytics::{DEFAULT_GRID, DEFAULT_UTC_OFFSET_MINUTES};
use crate::classify::{FeatureKind, ForestConfig, LinearConfig, LossKind, MaxFeatures, ModelKind, Optimizer};
use crate::corpus::GeoBox;
use crate::embed::EmbedConfig;
use crate::eval::{TermQuery, DEFAULT_TERMS};
use crate::vocab::{DEFAULT_MAX_DF_RATIO, DEFAULT_MAX_TERMS};

/// `"rio"`, `"sao_paulo"` or an explicit `{ sw = {lat, lon}, ne = {lat, lon} }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CitySpec {
    Named(String),
    Box(GeoBox),
}

impl CitySpec {
    pub fn resolve(&self) -> Result<GeoBox> {
        match self {
            CitySpec::Box(b) => Ok(*b),
            CitySpec::Named(n) => parse_city(n),
        }
    }
}

/// Parses a city name or `sw_lat,sw_lon,ne_lat,ne_lon`.
pub fn parse_city(s: &str) -> Result<GeoBox> {
    match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
        "rio" | "rio_de_janeiro" => return Ok(GeoBox::rio_de_janeiro()),
        "sp" | "sao_paulo" | "são_paulo" => return Ok(GeoBox::sao_paulo()),
        _ => {}
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("city `{s}` is neither a known name nor four comma-separated numbers"))?;
    if parts.len() != 4 {
        bail!("city box needs four numbers: sw_lat,sw_lon,ne_lat,ne_lon");
    }
    Ok(GeoBox::from_corners(parts[0], parts[1], parts[2], parts[3])?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub city: CitySpec,
    pub language: String,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            city: CitySpec::Named("rio".into()),
            language: "pt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub max_terms: usize,
    pub max_df_ratio: f64,
}

impl Default for VocabSection {
    fn default() -> Self {
        VocabSection {
            max_terms: DEFAULT_MAX_TERMS,
            max_df_ratio: DEFAULT_MAX_DF_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub dims: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub learning_rate: f32,
    /// 0 disables subsampling.
    pub subsample: f64,
}

impl Default for EmbedSection {
    fn default() -> Self {
        let d = EmbedConfig::default();
        EmbedSection {
            dims: d.dims,
            window: d.window,
            epochs: d.epochs,
            negatives: d.negatives,
            min_count: d.min_count,
            learning_rate: d.learning_rate,
            subsample: 0.0,
        }
    }
}

/// `"sqrt"`, `"all"` or a count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeaturesSpec {
    Count(usize),
    Named(String),
}

impl MaxFeaturesSpec {
    pub fn resolve(&self) -> Result<MaxFeatures> {
        match self {
            MaxFeaturesSpec::Count(0) => bail!("max_features must be at least 1"),
            MaxFeaturesSpec::Count(k) => Ok(MaxFeatures::Count(*k)),
            MaxFeaturesSpec::Named(s) => parse_max_features(s),
        }
    }
}

pub fn parse_max_features(s: &str) -> Result<MaxFeatures> {
    match s {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        n => match n.parse::<usize>() {
            Ok(k) if k > 0 => Ok(MaxFeatures::Count(k)),
            _ => bail!("max_features must be sqrt, all or a positive integer, got `{n}`"),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub model: ModelKind,
    pub features: FeatureKind,
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub standardize: bool,
    pub n_trees: usize,
    pub max_features: MaxFeaturesSpec,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let lin = LinearConfig::svm();
        let rf = ForestConfig::default();
        ClassifierSection {
            model: ModelKind::Svm,
            features: FeatureKind::BowBoe,
            l2: lin.l2,
            epochs: lin.epochs,
            learning_rate: lin.learning_rate,
            standardize: lin.standardize,
            n_trees: rf.n_trees,
            max_features: MaxFeaturesSpec::Named("sqrt".into()),
            max_depth: 0,
            min_samples_split: rf.min_samples_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub terms: Vec<String>,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection {
            terms: DEFAULT_TERMS.iter().map(|t| t.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    pub utc_offset_minutes: i64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub top_hashtags: usize,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        AnalyticsSection {
            utc_offset_minutes: DEFAULT_UTC_OFFSET_MINUTES,
            grid_rows: DEFAULT_GRID,
            grid_cols: DEFAULT_GRID,
            top_hashtags: 20,
        }
    }
}

/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub input: Option<PathBuf>,
    pub train_annotations: Option<PathBuf>,
    pub test_annotations: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub corpus: CorpusSection,
    pub vocab: VocabSection,
    pub embed: EmbedSection,
    pub classifier: ClassifierSection,
    pub bootstrap: BootstrapSection,
    pub analytics: AnalyticsSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            workers: 1,
            corpus: CorpusSection::default(),
            vocab: VocabSection::default(),
            embed: EmbedSection::default(),
            classifier: ClassifierSection::default(),
            bootstrap: BootstrapSection::default(),
            analytics: AnalyticsSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file and anchors its relative paths at the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = super::read_to_string(path)?;
        let mut cfg =
            RunConfig::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [&mut p.input, &mut p.train_annotations, &mut p.test_annotations, &mut p.output_dir] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }

    pub fn city(&self) -> Result<GeoBox> {
        self.corpus.city.resolve()
    }

    pub fn embed_config(&self) -> EmbedConfig {
        let e = &self.embed;
        EmbedConfig {
            dims: e.dims,
            window: e.window,
            epochs: e.epochs,
            negatives: e.negatives,
            min_count: e.min_count,
            learning_rate: e.learning_rate,
            subsample: (e.subsample > 0.0).then_some(e.subsample),
            seed: self.seed,
            workers: self.workers.max(1),
        }
    }

    pub fn linear_config(&self) -> LinearConfig {
        let c = &self.classifier;
        let loss = match c.model {
            ModelKind::Logreg => LossKind::Logistic,
            _ => LossKind::Hinge,
        };
        LinearConfig {
            loss,
            l2: c.l2,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            seed: self.seed,
            shuffle: true,
            optimizer: Optimizer::Sgd,
            standardize: c.standardize,
        }
    }

    pub fn forest_config(&self) -> Result<ForestConfig> {
        let c = &self.classifier;
        Ok(ForestConfig {
            n_trees: c.n_trees,
            max_features: c.max_features.resolve()?,
            max_depth: (c.max_depth > 0).then_some(c.max_depth),
            min_samples_split: c.min_samples_split,
            bootstrap: true,
            seed: self.seed,
            workers: self.workers.max(1),
        })
    }

    pub fn term_query(&self) -> Result<TermQuery> {
        Ok(TermQuery::new(&self.bootstrap.terms)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[embed]\ndim = 3").is_err());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
seed = 7
[corpus]
city = { sw = { lat = -24.0, lon = -47.0 }, ne = { lat = -23.0, lon = -46.0 } }
[classifier]
model = "rf"
features = "bow"
max_features = 12
max_depth = 4
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.city().unwrap().north_east().lat(), -23.0);
        let rf = cfg.forest_config().unwrap();
        assert_eq!((rf.max_features, rf.max_depth, rf.seed), (MaxFeatures::Count(12), Some(4), 7));
        assert_eq!(cfg.classifier.features, FeatureKind::Bow);
    }

    #[test]
    fn city_names_and_boxes() {
        assert_eq!(parse_city("rio").unwrap(), GeoBox::rio_de_janeiro());
        assert_eq!(parse_city("São Paulo").unwrap(), GeoBox::sao_paulo());
        assert!(parse_city("-23,-46,-22,-45").is_ok());
        assert!(parse_city("-23,-46").is_err());
        assert!(parse_city("atlantis").is_err());
    }

    #[test]
    fn max_features_spec() {
        assert_eq!(parse_max_features("sqrt").unwrap(), MaxFeatures::Sqrt);
        assert_eq!(parse_max_features("7").unwrap(), MaxFeatures::Count(7));
        assert!(parse_max_features("0").is_err());
    }
}
