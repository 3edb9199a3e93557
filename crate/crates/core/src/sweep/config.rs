//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::backend::BackendSpec;
use crate::corpus::{
    load_dataset, Dataset, DatasetFormat, LoadOptions, TokenizerScheme, DEFAULT_PREFIX_LEN,
};
use crate::decoding::DEFAULT_MAX_NEW_TOKENS;
use crate::metrics::{DEFAULT_MAUVE_BINS, DEFAULT_MAUVE_SCALING};

use super::{io_err, validate_id, StrategyGrid, SweepError, SweepGrid};

/// A run document.
///
/// ```toml
/// run_seed = 0
/// max_new_tokens = 32
/// evaluator = "bigram"        # defaults to the first sweep backend
///
/// [[backend]]
/// name = "bigram"
/// kind = "ngram"
/// corpus = "train.txt"
///
/// [[dataset]]
/// id = "stories"
/// path = "stories.txt"
/// format = "rawtext"          # or "jsonl"
/// prefix_len = 32
/// weight = 1947               # defaults to the record count
///
/// [sweep]
/// backends = ["bigram"]
/// datasets = ["stories"]
/// seeds = [0]
///
/// [[sweep.strategy]]
/// name = "beam"
/// w = [3, 5, 10]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub run_seed: u64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: usize,
    pub evaluator: Option<String>,
    #[serde(default = "default_mauve_bins")]
    pub mauve_bins: usize,
    #[serde(default = "default_mauve_scaling")]
    pub mauve_scaling: f64,
    #[serde(default, rename = "backend")]
    pub backends: Vec<BackendSpec>,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
    pub sweep: Option<SweepSection>,
}

fn default_max_new_tokens() -> usize {
    DEFAULT_MAX_NEW_TOKENS
}

fn default_mauve_bins() -> usize {
    DEFAULT_MAUVE_BINS
}

fn default_mauve_scaling() -> f64 {
    DEFAULT_MAUVE_SCALING
}

fn default_prefix_len() -> usize {
    DEFAULT_PREFIX_LEN
}

fn default_min_gold() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
    #[serde(default)]
    pub scheme: TokenizerScheme,
    #[serde(default = "default_prefix_len")]
    pub prefix_len: usize,
    #[serde(default = "default_min_gold")]
    pub min_gold: usize,
    /// Aggregation weight; defaults to the number of loaded records.
    pub weight: Option<f64>,
}

impl DatasetSpec {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            format: self.format,
            scheme: self.scheme,
            prefix_len: self.prefix_len,
            min_gold_len: self.min_gold,
        }
    }

    pub fn resolve(&self, base_dir: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base_dir.join(&self.path)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub backends: Vec<String>,
    pub datasets: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(rename = "strategy", default)]
    pub strategies: Vec<StrategyGrid>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), SweepError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok((Self::from_toml(&text)?, text))
    }

    fn validate(&self) -> Result<(), SweepError> {
        let mut ids: Vec<&str> = Vec::new();
        for d in &self.datasets {
            validate_id("dataset id", &d.id)?;
            if ids.contains(&d.id.as_str()) {
                return Err(SweepError::Config(format!(
                    "duplicate dataset id `{}`",
                    d.id
                )));
            }
            ids.push(&d.id);
            if let Some(w) = d.weight {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(SweepError::Config(format!(
                        "dataset `{}` weight must be > 0",
                        d.id
                    )));
                }
            }
        }
        if self.mauve_bins < 2 {
            return Err(SweepError::Config("mauve_bins must be >= 2".into()));
        }
        if !(self.mauve_scaling > 0.0 && self.mauve_scaling.is_finite()) {
            return Err(SweepError::Config("mauve_scaling must be > 0".into()));
        }
        Ok(())
    }

    pub fn dataset(&self, id: &str) -> Option<&DatasetSpec> {
        self.datasets.iter().find(|d| d.id == id)
    }

    /// Loads the dataset declared under `id`, resolving its path against
    /// `base_dir`.
    pub fn load_dataset(&self, id: &str, base_dir: &Path) -> Result<Dataset, SweepError> {
        let spec = self
            .dataset(id)
            .ok_or_else(|| SweepError::Config(format!("unknown dataset `{id}`")))?;
        Ok(load_dataset(
            spec.resolve(base_dir),
            id,
            &spec.load_options(),
        )?)
    }

    pub fn grid(&self) -> Result<SweepGrid, SweepError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| SweepError::Config("config has no [sweep] section".into()))?;
        Ok(SweepGrid {
            backends: s.backends.clone(),
            datasets: s.datasets.clone(),
            strategies: s.strategies.clone(),
            seeds: s.seeds.clone(),
            max_new_tokens: self.max_new_tokens,
        })
    }

    /// Explicit evaluator, else the first sweep backend, else the first
    /// declared backend.
    pub fn evaluator_name(&self) -> Option<String> {
        self.evaluator
            .clone()
            .or_else(|| {
                self.sweep
                    .as_ref()
                    .and_then(|s| s.backends.first().cloned())
            })
            .or_else(|| self.backends.first().map(|b| b.name.clone()))
    }
}
